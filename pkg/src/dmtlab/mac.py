"""Multiple-access extension: common one-bit feedback to L symmetric transmitters.

Each user trains the receiver separately; the receiver broadcasts a single
power-controlled index decided from the union outage condition over all user
subsets, and each user decodes it through its own independent reverse
channel, so users can end up at different power levels within one trial.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from dmtlab.channel import (
    margin_rate,
    mmse_coefficients,
    sample_rayleigh,
    target_rate,
)
from dmtlab.feedback import FeedbackPolicy, PowerPolicy, transmit_feedback_power_controlled
from dmtlab.simulate import (
    _CHUNK,
    _TAG_CALIBRATION,
    _TAG_TRIALS,
    OutageEstimate,
    Policies,
    _detection_margin,
    wilson_interval,
)

_LN2 = np.log(2.0)


@dataclass(frozen=True)
class MacConfig:
    """Symmetric multiple-access operating point: L users of m antennas each."""

    l_users: int
    m: int
    n: int
    snr: float
    r_vec: tuple[float, ...]
    k_levels: int = 2
    n_train: int = 10
    epsilon: float = 0.05

    def __post_init__(self):
        if self.l_users < 1:
            raise ValueError("need at least one user")
        if len(self.r_vec) != self.l_users:
            raise ValueError("r_vec must have one gain per user")
        if self.m < 1 or self.n < 1:
            raise ValueError("antenna counts must be >= 1")
        if self.snr <= 1:
            raise ValueError("linear snr must exceed 1")
        if self.k_levels != 2:
            raise ValueError("the common-feedback protocol is defined for k_levels = 2")
        if self.n_train < self.m:
            raise ValueError("pilot length must be >= m")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        for size in range(1, self.l_users + 1):
            for subset in itertools.combinations(range(self.l_users), size):
                if sum(self.r_vec[i] for i in subset) >= min(size * self.m, self.n):
                    raise ValueError(f"subset {subset} violates its rate constraint")


@dataclass(frozen=True)
class MacTrialRecord:
    """One MAC protocol run with per-user decoded indices and powers."""

    j_r: int
    j_t_vec: tuple[int, ...]
    outage: bool
    fwd_powers: tuple[float, ...]
    fb_power: float


def _subsets(l_users: int):
    for size in range(1, l_users + 1):
        yield from itertools.combinations(range(l_users), size)


def union_outage_check(
    h_set,
    r_vec,
    p_vec,
    snr: float,
    err_traces=None,
    rate_margin: float = 0.0,
) -> np.ndarray | bool:
    """Union outage over all nonempty user subsets.

    For subset S the stacked link fails when
        log2 det(I + (1/m) sum_{i in S} p_i H_i H_i^dag / infl_S)
            < sum_{i in S} rate_i,
    where infl_S = 1 + sum_{i in S} (p_i / (m n)) tr(err_i err_i^dag) folds
    the per-user estimation errors into one noise term (zero without
    err_traces).  Stacking users at their own realized powers is the
    concatenated-channel determinant, so mismatched users enter with their
    mismatched power.  p_vec entries may be scalars or per-trial arrays.
    """
    h_set = [np.asarray(h) for h in h_set]
    l_users = len(h_set)
    if len(r_vec) != l_users:
        raise ValueError("one multiplexing gain per user required")
    m = h_set[0].shape[-1]
    n = h_set[0].shape[-2]
    for h in h_set:
        if h.shape[-2:] != (n, m):
            raise ValueError("all users must share antenna dimensions")
    batched = h_set[0].ndim == 3
    batch = h_set[0].shape[0] if batched else 1
    p_vec = [np.broadcast_to(np.asarray(p, dtype=float), (batch,)) for p in p_vec]

    grams = []
    for h in h_set:
        hh = h if batched else h[None]
        grams.append(hh @ np.conj(np.swapaxes(hh, -1, -2)))

    if err_traces is None:
        err_traces = [np.zeros(batch) for _ in range(l_users)]
    else:
        err_traces = [np.broadcast_to(np.asarray(t, dtype=float), (batch,)) for t in err_traces]

    rates = [target_rate(snr, r) + rate_margin for r in r_vec]
    eye = np.eye(n)
    outage = np.zeros(batch, dtype=bool)
    for subset in _subsets(l_users):
        infl = 1.0 + sum((p_vec[i] / (m * n)) * err_traces[i] for i in subset)
        a = eye + sum(
            (p_vec[i] / (m * infl))[:, None, None] * grams[i] for i in subset
        )
        _, logdet = np.linalg.slogdet(a)
        outage |= logdet / _LN2 < sum(rates[i] for i in subset)
    return outage if batched else bool(outage[0])


def calibrate_mac(
    config: MacConfig, pilot_trials: int = 100_000, seed: int = 0
) -> Policies:
    """One-bit MAC power calibration from a pilot union-outage run.

    P_0 = snr/2 and P_1 = snr / (4 Pi_1) with Pi_1 the pilot probability of
    requesting the high level (estimated channels, margined rates), floored
    at 3/pilot_trials; the broadcast feedback burst gets Q_1 = snr / (2 Pi_1).
    """
    if pilot_trials < 10_000:
        raise ValueError("calibration needs at least 1e4 pilot trials")
    snr = config.snr
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(_TAG_CALIBRATION, 1))
    )
    c1, c2 = mmse_coefficients(config.m, snr, config.n_train)
    h_hat = [
        c1 * sample_rayleigh(config.m, config.n, rng, count=pilot_trials)
        + c2 * sample_rayleigh(config.m, config.n, rng, count=pilot_trials)
        for _ in range(config.l_users)
    ]
    p0 = snr / 2.0
    margin = config.epsilon * float(np.log2(snr))
    request_high = union_outage_check(
        h_hat,
        config.r_vec,
        [p0] * config.l_users,
        snr,
        rate_margin=margin,
    )
    hits = int(np.count_nonzero(request_high))
    flag = "low-confidence" if hits < 3 else ""
    pi_1 = max(hits / pilot_trials, 3.0 / pilot_trials)
    power = PowerPolicy((p0, snr / (4.0 * pi_1)), snr, low_confidence=bool(flag))
    q_levels = (0.0, snr / (2.0 * pi_1))

    # reuse the single-user threshold balance with the pilot index distribution
    dummy = _MacMarginConfig(config)
    eps = _mac_detection_margin(dummy, q_levels, pi_1)
    return Policies(power, FeedbackPolicy(q_levels, snr, eps), flag)


class _MacMarginConfig:
    """Adapter exposing the fields _detection_margin needs."""

    def __init__(self, config: MacConfig):
        self.m = config.m
        self.n = config.n
        self.snr = config.snr
        self.epsilon = config.epsilon


def _mac_detection_margin(cfg, q_levels, pi_1: float) -> float:
    from scipy import stats
    from scipy.optimize import brentq

    mn = cfg.m * cfg.n
    gamma = stats.gamma(a=mn)

    def balance(tau: float) -> float:
        return gamma.sf(tau) - 0.5 * pi_1 * gamma.cdf(tau / (q_levels[1] + 1.0))

    lo = gamma.ppf(0.5)
    hi = gamma.isf(1e-14)
    if balance(lo) <= 0:
        tau = lo
    elif balance(hi) >= 0:
        tau = hi
    else:
        tau = brentq(balance, lo, hi, xtol=1e-9)
    return float(max(cfg.epsilon, np.log(tau) / np.log(cfg.snr)))


def _run_mac_batch(
    config: MacConfig,
    policies: Policies,
    rng: np.random.Generator,
    count: int,
    noiseless_feedback: bool = False,
    shared_reverse: bool = False,
) -> dict:
    """Vectorized MAC trials; the reverse-channel knobs exist for tests."""
    snr = config.snr
    m, n, l_users = config.m, config.n, config.l_users
    levels = policies.power.levels_array

    h = [sample_rayleigh(m, n, rng, count=count) for _ in range(l_users)]
    c1, c2 = mmse_coefficients(m, snr, config.n_train)
    h_hat = [
        c1 * h[i] + c2 * sample_rayleigh(m, n, rng, count=count) for i in range(l_users)
    ]
    margin = config.epsilon * float(np.log2(snr))
    j_r = union_outage_check(
        h_hat, config.r_vec, [levels[0]] * l_users, snr, rate_margin=margin
    ).astype(int)

    if noiseless_feedback:
        j_t = [j_r.copy() for _ in range(l_users)]
        fb_power = np.zeros(count)
    else:
        j_t = []
        h_f_shared = sample_rayleigh(n, m, rng, count=count) if shared_reverse else None
        fb_power = policies.feedback.levels_array[j_r]
        for _ in range(l_users):
            h_f = h_f_shared if shared_reverse else sample_rayleigh(n, m, rng, count=count)
            out = transmit_feedback_power_controlled(j_r, policies.feedback, h_f, rng)
            j_t.append(np.minimum(out.j_t, config.k_levels - 1))

    c1v = np.empty(len(levels))
    c2v = np.empty(len(levels))
    err_var = np.empty(len(levels))
    for i, p in enumerate(levels):
        c1v[i], c2v[i] = mmse_coefficients(m, p, config.n_train)
        err_var[i] = 1.0 / (1.0 + config.n_train * p / m)

    h_dec, err_traces, p_used = [], [], []
    for i in range(l_users):
        w2 = sample_rayleigh(m, n, rng, count=count)
        jt = j_t[i]
        dec = c1v[jt][:, None, None] * h[i] + c2v[jt][:, None, None] * w2
        h_dec.append(dec)
        err = h[i] - dec
        err_traces.append(np.sum(np.abs(err) ** 2, axis=(-2, -1)))
        p_used.append(levels[jt])

    outage = union_outage_check(
        h_dec, config.r_vec, p_used, snr, err_traces=err_traces
    )
    return {
        "j_r": j_r,
        "j_t": np.stack(j_t, axis=1),
        "outage": outage,
        "fwd_powers": np.stack(p_used, axis=1),
        "fb_power": fb_power if not noiseless_feedback else np.zeros(count),
    }


def run_mac_trial(
    config: MacConfig,
    policies: Policies,
    rng: np.random.Generator,
    noiseless_feedback: bool = False,
    shared_reverse: bool = False,
) -> MacTrialRecord:
    """Execute one three-phase MAC trial."""
    out = _run_mac_batch(
        config, policies, rng, 1,
        noiseless_feedback=noiseless_feedback, shared_reverse=shared_reverse,
    )
    return MacTrialRecord(
        j_r=int(out["j_r"][0]),
        j_t_vec=tuple(int(v) for v in out["j_t"][0]),
        outage=bool(out["outage"][0]),
        fwd_powers=tuple(float(v) for v in out["fwd_powers"][0]),
        fb_power=float(out["fb_power"][0]),
    )


def _mac_chunk_worker(args) -> tuple[int, float, float]:
    config, policies, seed, chunk_index, size, noiseless = args
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(_TAG_TRIALS, chunk_index))
    )
    out = _run_mac_batch(config, policies, rng, size, noiseless_feedback=noiseless)
    return (
        int(np.count_nonzero(out["outage"])),
        float(np.sum(out["fwd_powers"]) / config.l_users),
        float(np.sum(out["fb_power"])),
    )


def estimate_mac_outage(
    config: MacConfig,
    trials: int,
    seed: int = 0,
    parallelism: int = 1,
    policies: Policies | None = None,
    pilot_trials: int = 100_000,
    noiseless_feedback: bool = False,
) -> OutageEstimate:
    """Union-outage probability with the same deterministic chunking as
    the single-user engine; mean_fwd_power averages across users."""
    if trials < 1:
        raise ValueError("need at least one trial")
    if policies is None:
        policies = calibrate_mac(config, pilot_trials, seed=seed)
    sizes = [_CHUNK] * (trials // _CHUNK)
    if trials % _CHUNK:
        sizes.append(trials % _CHUNK)
    jobs = [
        (config, policies, seed, i, size, noiseless_feedback)
        for i, size in enumerate(sizes)
    ]
    if parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_mac_chunk_worker, jobs, chunksize=8))
    else:
        results = [_mac_chunk_worker(job) for job in jobs]
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
