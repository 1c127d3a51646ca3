"""End-to-end Monte Carlo for the power-controlled training and feedback protocols.

A trial runs up to three phases: pilot training at full SNR, index feedback
over the chosen reverse-link model, and (for power-controlled training)
retraining plus data at the decoded power level.  Trials execute in fixed
chunks whose generators derive deterministically from (seed, chunk index),
so estimates are bit-identical for any degree of parallelism.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from dmtlab.channel import (
    MimoConfig,
    effective_mutual_information,
    margin_rate,
    mmse_coefficients,
    mutual_information,
    sample_rayleigh,
    target_rate,
)
from dmtlab.feedback import (
    FeedbackPolicy,
    PowerPolicy,
    receiver_index_estimated_csir,
    receiver_index_perfect_csir,
    transmit_feedback_constant_power,
    transmit_feedback_power_controlled,
)

_CHUNK = 1 << 16
_Z95 = 1.959963984540054
_TAG_TRIALS = 0
_TAG_CALIBRATION = 1


class Scenario(enum.Enum):
    """CSI quality at each end and the feedback transport between them."""

    NO_FEEDBACK = "no-feedback"
    PERFECT_CSIR_NOISELESS_FB = "perfect-csir-noiseless-fb"
    PERFECT_CSIR_NOISY_FB_CONST = "perfect-csir-noisy-fb-const"
    PERFECT_CSIR_NOISY_FB_PC = "perfect-csir-noisy-fb-pc"
    EST_CSIR_NOISELESS_FB_CONST_TRAIN = "est-csir-noiseless-fb-const-train"
    EST_CSIR_NOISELESS_FB_PC_TRAIN = "est-csir-noiseless-fb-pc-train"
    EST_CSIR_NOISY_FB_PC = "est-csir-noisy-fb-pc"

    @property
    def estimated_csir(self) -> bool:
        return self in (
            Scenario.EST_CSIR_NOISELESS_FB_CONST_TRAIN,
            Scenario.EST_CSIR_NOISELESS_FB_PC_TRAIN,
            Scenario.EST_CSIR_NOISY_FB_PC,
        )

    @property
    def retrains(self) -> bool:
        return self in (
            Scenario.EST_CSIR_NOISELESS_FB_PC_TRAIN,
            Scenario.EST_CSIR_NOISY_FB_PC,
        )

    @property
    def noisy_feedback(self) -> bool:
        return self in (
            Scenario.PERFECT_CSIR_NOISY_FB_CONST,
            Scenario.PERFECT_CSIR_NOISY_FB_PC,
            Scenario.EST_CSIR_NOISY_FB_PC,
        )

    @property
    def power_controlled_feedback(self) -> bool:
        return self in (Scenario.PERFECT_CSIR_NOISY_FB_PC, Scenario.EST_CSIR_NOISY_FB_PC)


@dataclass(frozen=True)
class Policies:
    """Calibrated power ladder plus (for energy feedback) the reverse policy."""

    power: PowerPolicy
    feedback: FeedbackPolicy | None = None
    flag: str = ""


@dataclass(frozen=True)
class TrialRecord:
    """One protocol run: oracle/receiver/transmitter indices and the verdict."""

    j_oracle: int
    j_r: int
    j_t: int
    outage: bool
    fwd_power_used: float
    fb_power_used: float


@dataclass(frozen=True)
class OutageEstimate:
    """Monte Carlo outage estimate at one SNR with a 95% Wilson interval."""

    snr: float
    trials: int
    outages: int
    p_hat: float
    ci_low: float
    ci_high: float
    mean_fwd_power: float
    mean_fb_power: float
    flag: str = ""


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(center - half, 0.0)
    hi = 1.0 if successes == trials else min(center + half, 1.0)
    return lo, hi


def _validate(scenario: Scenario, config: MimoConfig) -> None:
    if scenario is Scenario.EST_CSIR_NOISY_FB_PC and config.k_levels != 2:
        raise ValueError("the combined-errors protocol is defined for k_levels = 2")
    if scenario is not Scenario.NO_FEEDBACK and config.k_levels < 1:
        raise ValueError("feedback scenarios need k_levels >= 1")


def calibrate_power_levels(
    scenario: Scenario,
    config: MimoConfig,
    pilot_trials: int = 100_000,
    seed: int = 0,
) -> Policies:
    """Build the power ladder from a pilot run of insufficiency probabilities.

    Level 0 gets snr/K; level i gets snr / (K * S_i) where S_i is the pilot
    estimate of the probability that level i-1 misses the (margined, for
    estimated CSI) rate target, floored at 3/pilot_trials so a clean pilot
    cannot demand unbounded power.  The one-bit protocols use divisor 4 on
    the high level when the feedback link is noisy, leaving headroom for
    decoding errors, and the energy-feedback level is snr / (2 S_1).  With
    constant-power feedback the index-error floor c*snr^-mn is added to S_i,
    which reproduces the capped ladder that limits that scheme.
    """
    if pilot_trials < 10_000:
        raise ValueError("calibration needs at least 1e4 pilot trials")
    _validate(scenario, config)
    snr = config.snr
    k = 1 if scenario is Scenario.NO_FEEDBACK else config.k_levels
    if k == 1:
        return Policies(PowerPolicy((snr,), snr))

    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(_TAG_CALIBRATION,))
    )
    h = sample_rayleigh(config.m, config.n, rng, count=pilot_trials)
    if scenario.estimated_csir:
        c1, c2 = mmse_coefficients(config.m, snr, config.n_train)
        base = c1 * h + c2 * sample_rayleigh(config.m, config.n, rng, count=pilot_trials)
        rate = margin_rate(snr, config.r, config.epsilon)
    else:
        base = h
        rate = target_rate(snr, config.r)

    error_floor = 0.0
    if scenario is Scenario.PERFECT_CSIR_NOISY_FB_CONST:
        error_floor = min(config.const_fb_c * snr ** -(config.m * config.n), 1.0 / k)

    floor = 3.0 / pilot_trials
    flag = ""
    levels = [snr / k if k > 2 else snr / 2]
    s_values = []
    for i in range(1, k):
        misses = int(np.count_nonzero(mutual_information(base, levels[i - 1]) < rate))
        if misses < 3:
            flag = "low-confidence"
        s_i = max(misses / pilot_trials, floor) + error_floor
        s_values.append(s_i)
        divisor = 4.0 if (k == 2 and scenario.noisy_feedback) else float(k)
        levels.append(snr / (divisor * s_i))

    power = PowerPolicy(tuple(levels), snr, low_confidence=bool(flag))

    feedback = None
    if scenario.power_controlled_feedback:
        q_levels = [0.0]
        q_levels.append(snr / (2.0 * s_values[0]))
        for i in range(2, k):
            q_levels.append(levels[i])
        fallback = power.k_levels - 1 if scenario.estimated_csir else 0
        eps = _detection_margin(config, power, tuple(q_levels), base, rate, fallback)
        feedback = FeedbackPolicy(tuple(q_levels), snr, eps)
    return Policies(power, feedback, flag)


def _detection_margin(
    config: MimoConfig,
    power: PowerPolicy,
    q_levels: tuple[float, ...],
    pilot_base: np.ndarray,
    rate: float,
    fallback: int,
) -> float:
    """Detection margin exponent balancing false alarms against misdetections.

    Only the threshold exponents are pinned by the analysis; the constant is
    free, and at desk-scale SNR it decides whether silence trips the lowest
    threshold.  Solve sf(tau) = 0.5 * sum_j pi_j * cdf(tau / (Q_j + 1)) on
    the noise-floor Gamma(mn) statistic so upward errors stay strictly rarer
    than the downward errors the theory budgets for, then report it as an
    exponent (never below the configured epsilon).
    """
    mn = config.m * config.n
    gamma = stats.gamma(a=mn)
    # empirical index distribution under the final ladder
    if pilot_base.ndim == 2:
        pilot_base = pilot_base[None]
    suff = np.stack([mutual_information(pilot_base, p) >= rate for p in power.levels])
    counts = suff.sum(axis=0)
    j = np.where(counts > 0, power.k_levels - counts, fallback)
    pi = np.bincount(j.ravel(), minlength=power.k_levels) / j.size

    def balance(tau: float) -> float:
        down = sum(
            pi[i] * gamma.cdf(tau / (q + 1.0))
            for i, q in enumerate(q_levels)
            if i >= 1 and q > 0
        )
        return gamma.sf(tau) - 0.5 * down

    lo = gamma.ppf(0.5)
    hi = gamma.isf(1e-14)
    if balance(lo) <= 0:
        tau = lo
    elif balance(hi) >= 0:
        tau = hi
    else:
        from scipy.optimize import brentq

        tau = brentq(balance, lo, hi, xtol=1e-9)
    eps = np.log(tau) / np.log(config.snr)
    return float(max(config.epsilon, eps))


def _run_batch(
    scenario: Scenario,
    config: MimoConfig,
    policies: Policies,
    rng: np.random.Generator,
    count: int,
    keep_channels: bool = False,
) -> dict:
    """Vectorized execution of `count` independent trials."""
    m, n, snr = config.m, config.n, config.snr
    rate = target_rate(snr, config.r)
    levels = policies.power.levels_array
    k = policies.power.k_levels

    h = sample_rayleigh(m, n, rng, count=count)
    j_oracle = receiver_index_perfect_csir(h, policies.power, rate)
    j_oracle = np.atleast_1d(j_oracle)

    h_hat = None
    if scenario.estimated_csir:
        c1, c2 = mmse_coefficients(m, snr, config.n_train)
        h_hat = c1 * h + c2 * sample_rayleigh(m, n, rng, count=count)
        j_r = np.atleast_1d(
            receiver_index_estimated_csir(
                h_hat, policies.power, rate, config.epsilon, snr
            )
        )
    elif scenario is Scenario.NO_FEEDBACK:
        j_r = np.zeros(count, dtype=int)
    else:
        j_r = j_oracle

    if scenario is Scenario.NO_FEEDBACK or k == 1:
        j_t = np.zeros(count, dtype=int)
        fb_power = np.zeros(count)
    elif scenario.power_controlled_feedback:
        h_f = sample_rayleigh(n, m, rng, count=count)  # reverse link: m rows, n cols
        out = transmit_feedback_power_controlled(j_r, policies.feedback, h_f, rng)
        j_t = np.minimum(out.j_t, k - 1)
        fb_power = np.asarray(out.tx_power, dtype=float)
    elif scenario is Scenario.PERFECT_CSIR_NOISY_FB_CONST:
        j_t = transmit_feedback_constant_power(
            j_r, k, snr, m, n, rng, c=config.const_fb_c
        )
        fb_power = np.full(count, snr)
    else:  # noiseless transport
        j_t = j_r
        fb_power = np.zeros(count)

    p_used = levels[j_t] if scenario is not Scenario.NO_FEEDBACK else np.full(count, snr)

    if not scenario.estimated_csir:
        outage = np.atleast_1d(mutual_information(h, p_used)) < rate
        h_dec, h_err = h, None
    else:
        if scenario.retrains:
            c1v = np.empty(k)
            c2v = np.empty(k)
            for i, p in enumerate(levels):
                c1v[i], c2v[i] = mmse_coefficients(m, p, config.n_train)
            w2 = sample_rayleigh(m, n, rng, count=count)
            h_dec = c1v[j_t][:, None, None] * h + c2v[j_t][:, None, None] * w2
        else:
            h_dec = h_hat
        h_err = h - h_dec
        outage = np.atleast_1d(effective_mutual_information(h_dec, h_err, p_used)) < rate

    result = {
        "j_oracle": j_oracle,
        "j_r": j_r,
        "j_t": j_t,
        "outage": outage,
        "fwd_power": p_used.astype(float),
        "fb_power": fb_power,
    }
    if keep_channels:
        result["h"] = h
        result["h_hat"] = h_hat
        result["h_dec"] = h_dec
    return result


def run_trial(
    scenario: Scenario, config: MimoConfig, policies: Policies, rng: np.random.Generator
) -> TrialRecord:
    """Execute one protocol trial; randomness comes solely from `rng`."""
    _validate(scenario, config)
    out = _run_batch(scenario, config, policies, rng, count=1)
    return TrialRecord(
        j_oracle=int(out["j_oracle"][0]),
        j_r=int(out["j_r"][0]),
        j_t=int(out["j_t"][0]),
        outage=bool(out["outage"][0]),
        fwd_power_used=float(out["fwd_power"][0]),
        fb_power_used=float(out["fb_power"][0]),
    )


def _chunk_worker(args) -> tuple[int, float, float]:
    scenario_value, config, policies, seed, chunk_index, size = args
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(_TAG_TRIALS, chunk_index))
    )
    out = _run_batch(Scenario(scenario_value), config, policies, rng, size)
    return (
        int(np.count_nonzero(out["outage"])),
        float(np.sum(out["fwd_power"])),
        float(np.sum(out["fb_power"])),
    )


def estimate_outage(
    scenario: Scenario,
    config: MimoConfig,
    trials: int,
    seed: int = 0,
    parallelism: int = 1,
    policies: Policies | None = None,
    pilot_trials: int = 100_000,
) -> OutageEstimate:
    """Outage probability over `trials` protocol runs with a Wilson 95% CI.

    Trials are partitioned into fixed chunks seeded from (seed, chunk index)
    and reduced in chunk order, so the result does not depend on
    `parallelism`.  Policies are calibrated from a pilot run (its generator
    is derived from the same seed on a separate stream) unless provided.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    _validate(scenario, config)
    if policies is None:
        policies = calibrate_power_levels(scenario, config, pilot_trials, seed=seed)

    sizes = [_CHUNK] * (trials // _CHUNK)
    if trials % _CHUNK:
        sizes.append(trials % _CHUNK)
    jobs = [
        (scenario.value, config, policies, seed, i, size) for i, size in enumerate(sizes)
    ]
    if parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_chunk_worker, jobs, chunksize=8))
    else:
        results = [_chunk_worker(job) for job in jobs]

    outages = sum(r[0] for r in results)
    fwd = sum(r[1] for r in results)
    fb = sum(r[2] for r in results)
    lo, hi = wilson_interval(outages, trials)
    return OutageEstimate(
        snr=config.snr,
        trials=trials,
        outages=outages,
        p_hat=outages / trials,
        ci_low=lo,
        ci_high=hi,
        mean_fwd_power=fwd / trials,
        mean_fb_power=fb / trials,
        flag=policies.flag,
    )


def sweep_outage(
    scenario: Scenario,
    config: MimoConfig,
    snr_grid: list[float],
    trials_per_point: list[int] | int,
    seed: int = 0,
    parallelism: int = 1,
    pilot_trials: int = 100_000,
) -> list[OutageEstimate]:
    """estimate_outage across an SNR grid; each point gets its own seed stream."""
    if isinstance(trials_per_point, int):
        trials_per_point = [trials_per_point] * len(snr_grid)
    if len(trials_per_point) != len(snr_grid):
        raise ValueError("need one trial count per SNR point")
    points = []
    for idx, (snr, trials) in enumerate(zip(snr_grid, trials_per_point)):
        cfg = replace(config, snr=snr)
        point_seed = int(
            np.random.SeedSequence(entropy=seed, spawn_key=(idx,)).generate_state(1)[0]
        )
        points.append(
            estimate_outage(
                scenario,
                cfg,
                trials,
                seed=point_seed,
                parallelism=parallelism,
                pilot_trials=pilot_trials,
            )
        )
    return points


def estimate_diversity_slope(points: list[OutageEstimate]) -> tuple[float, float]:
    """Least-squares slope of -log10(p_hat) against log10(snr).

    Zero-outage points cannot enter the regression; at least three of the
    remaining points must carry 10+ outages for the fit to be meaningful.
    """
    usable = [p for p in points if p.outages > 0]
    if sum(1 for p in usable if p.outages >= 10) < 3:
        raise ValueError("need at least three points with >= 10 outages")
    x = np.log10([p.snr for p in usable])
    y = -np.log10([p.p_hat for p in usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = max(len(usable) - 2, 1)
    stderr = float(np.sqrt(np.sum(resid**2) / dof / np.sum((x - x.mean()) ** 2)))
    return float(slope), stderr
