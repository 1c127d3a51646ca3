"""Index selection at the receiver and index transport over the noisy reverse link.

Power-controlled feedback keys the index into transmit energy: level i
sounds the reverse channel at power Q_i, and the far end recovers the index
by comparing total received energy against thresholds snr^(max(q_i,0)+eps).
All operations accept either one channel draw or a stacked batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dmtlab.channel import mutual_information, sample_rayleigh


@dataclass(frozen=True)
class PowerPolicy:
    """Forward power levels P_0 <= ... <= P_{K-1} with their SNR exponents.

    levels are realized linear powers; exponents[i] is log_snr(P_i) - 1 and
    scales[i] the residual constant, so P_i = scales[i] * snr^(1+exponents[i])
    holds exactly.  low_confidence marks levels whose calibration hit the
    rule-of-three floor.
    """

    levels: tuple[float, ...]
    snr: float
    scales: tuple[float, ...] | None = None
    low_confidence: bool = False

    def __post_init__(self):
        if len(self.levels) < 1:
            raise ValueError("need at least one power level")
        if any(p <= 0 for p in self.levels):
            raise ValueError("power levels must be positive")
        if any(b < a * (1 - 1e-12) for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("power levels must be nondecreasing")
        if self.scales is None:
            object.__setattr__(self, "scales", tuple(1.0 for _ in self.levels))

    @property
    def k_levels(self) -> int:
        return len(self.levels)

    @property
    def exponents(self) -> tuple[float, ...]:
        log_snr = np.log(self.snr)
        return tuple(
            float(np.log(p / c) / log_snr - 1.0) for p, c in zip(self.levels, self.scales)
        )

    @property
    def levels_array(self) -> np.ndarray:
        return np.asarray(self.levels)


@dataclass(frozen=True)
class FeedbackPolicy:
    """Reverse-link energy levels Q_i and the detection thresholds between them.

    Q_0 may be zero (index 0 sends nothing).  Threshold i separating levels
    i and i+1 sits at snr^(max(q_i, 0) + epsilon) exactly, with q_i the
    realized exponent log_snr(Q_i); epsilon is the detection margin.
    """

    levels: tuple[float, ...]
    snr: float
    epsilon: float
    thresholds: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if len(self.levels) < 2:
            raise ValueError("feedback needs at least two levels")
        if any(q < 0 for q in self.levels):
            raise ValueError("reverse powers must be nonnegative")
        if any(b <= a for a, b in zip(self.levels[1:], self.levels[2:])):
            raise ValueError("reverse powers above level 0 must be strictly increasing")
        if self.epsilon <= 0:
            raise ValueError("detection margin must be positive")
        log_snr = np.log(self.snr)
        taus = []
        for q_lin in self.levels[:-1]:
            q_exp = -np.inf if q_lin == 0 else np.log(q_lin) / log_snr
            taus.append(float(self.snr ** (max(q_exp, 0.0) + self.epsilon)))
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("detection thresholds must be strictly increasing")
        object.__setattr__(self, "thresholds", tuple(taus))

    @property
    def k_levels(self) -> int:
        return len(self.levels)

    @property
    def exponents(self) -> tuple[float, ...]:
        log_snr = np.log(self.snr)
        return tuple(
            float(np.log(q) / log_snr) if q > 0 else -np.inf for q in self.levels
        )

    @property
    def levels_array(self) -> np.ndarray:
        return np.asarray(self.levels)


@dataclass(frozen=True)
class FeedbackOutcome:
    """One reverse-link transaction: requested index, decoded index, energy."""

    j_r: np.ndarray | int
    j_t: np.ndarray | int
    energy: np.ndarray | float
    tx_power: np.ndarray | float


def _first_sufficient(sufficient: np.ndarray, fallback: int) -> np.ndarray:
    """Index of the first True along axis 0, `fallback` where none are."""
    any_ok = sufficient.any(axis=0)
    first = sufficient.argmax(axis=0)
    return np.where(any_ok, first, fallback)


def receiver_index_perfect_csir(h: np.ndarray, powers: PowerPolicy, rate: float):
    """Smallest power level whose mutual information reaches `rate`; 0 if none.

    The all-insufficient state is genuine outage, so with perfect receiver
    CSI it is parked on the cheapest level.
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    sufficient = np.stack([mutual_information(h, p) >= rate for p in powers.levels])
    idx = _first_sufficient(sufficient, fallback=0)
    return int(idx) if idx.ndim == 0 else idx


def receiver_index_estimated_csir(
    h_hat: np.ndarray, powers: PowerPolicy, rate: float, epsilon: float, snr: float
):
    """Smallest level clearing `rate` plus the epsilon*log2(snr) margin; K-1 if none.

    With estimated CSI the perceived-outage state is sent at the highest
    power level, which hedges against underestimating the channel.
    """
    if epsilon <= 0:
        raise ValueError("margin exponent must be positive")
    threshold = rate + epsilon * float(np.log2(snr))
    sufficient = np.stack([mutual_information(h_hat, p) >= threshold for p in powers.levels])
    idx = _first_sufficient(sufficient, fallback=powers.k_levels - 1)
    return int(idx) if idx.ndim == 0 else idx


def transmit_feedback_power_controlled(
    j_r, policy: FeedbackPolicy, h_f: np.ndarray, rng: np.random.Generator
) -> FeedbackOutcome:
    """Send index j_r as a power-Q_{j_r} sounding burst; decode by energy.

    h_f is the fresh reverse channel (m receive rows at the feedback
    destination, n sounding columns).  The decoded index is the number of
    thresholds below the received energy
        S_f = || sqrt(Q) H_f + W ||_F^2
          = tr(H_f H_f^dag Q + W W^dag + sqrt(Q)(H_f W^dag + W H_f^dag)),
    so detection is monotone in S_f and errors toward higher indices require
    the noise itself to beat a threshold.
    """
    j_r = np.asarray(j_r)
    q = policy.levels_array[j_r]
    w = sample_rayleigh(h_f.shape[-1], h_f.shape[-2], rng,
                        count=None if h_f.ndim == 2 else int(np.prod(h_f.shape[:-2])))
    w = w.reshape(h_f.shape)
    burst = np.sqrt(q)[..., None, None] * h_f + w if j_r.ndim else np.sqrt(q) * h_f + w
    energy = np.sum(np.abs(burst) ** 2, axis=(-2, -1))
    taus = np.asarray(policy.thresholds)
    j_t = (energy[..., None] >= taus).sum(axis=-1)
    if j_r.ndim == 0:
        return FeedbackOutcome(int(j_r), int(j_t), float(energy), float(q))
    return FeedbackOutcome(j_r, j_t, energy, q)


def transmit_feedback_constant_power(
    j_r, k_levels: int, snr: float, m: int, n: int, rng: np.random.Generator, c: float = 1.0
):
    """Constant-power reverse link modeled as a symmetric index-error channel.

    Each wrong index is received with probability c * snr^-mn (capped so the
    total error stays below 1), the non-coherent error floor of an m x n
    block; the index itself is returned, not an outcome record.
    """
    if k_levels < 2:
        raise ValueError("needs at least two indices")
    j_r = np.asarray(j_r)
    eps_wrong = min(c * snr ** -(m * n), 1.0 / k_levels)
    u = rng.random(j_r.shape if j_r.ndim else None)
    u = np.asarray(u)
    wrong = u < (k_levels - 1) * eps_wrong
    # u also picks which wrong index, uniformly among the K-1 others
    offset = 1 + np.floor(u / eps_wrong).astype(int)
    j_t = np.where(wrong, (j_r + offset) % k_levels, j_r)
    return int(j_t) if j_t.ndim == 0 else j_t
