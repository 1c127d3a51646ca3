"""Diversity-multiplexing tradeoff lab for MIMO links with noisy quantized feedback."""

from dmtlab.channel import (
    EstimateResult,
    MimoConfig,
    effective_mutual_information,
    eigen_exponents,
    margin_rate,
    mmse_estimate,
    mutual_information,
    sample_rayleigh,
    target_rate,
)
from dmtlab.tradeoff import (
    DmtCurve,
    FeedbackExponents,
    coherent_tradeoff,
    coherent_tradeoff_curve,
    constant_power_feedback_tradeoff,
    mac_feedback_tradeoff,
    mac_tradeoff,
    perfect_feedback_tradeoff,
    power_controlled_feedback_tradeoff,
    training_tradeoff,
)

__version__ = "0.1.0"
