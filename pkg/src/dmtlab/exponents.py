"""Empirical verification of the joint eigenvalue-exponent law of trained links.

At training power ~ snr the exponent pairs (alpha, alpha_hat) of the true
and estimated channels split into classes E_k: the first k pairs both sit
above the noise floor (>= 1) and the rest coincide below it.  The class-k
density carries the exponent
    k(|n-m|+k) - sum_{i<=k} (2i-1+|n-m|) alpha_hat_i
               - sum_{i<=mN} (2i-1+|n-m|) alpha_i,
which this module checks through log-log slopes of region probabilities;
absolute levels are only defined up to constants and are not asserted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dmtlab.channel import eigen_exponents, mmse_coefficients, sample_rayleigh
from dmtlab.simulate import wilson_interval


@dataclass(frozen=True)
class JointExponentSamples:
    """Stacked exponent pairs: alpha, alpha_hat of shape (trials, min(m,n))."""

    alpha: np.ndarray
    alpha_hat: np.ndarray
    snr: float
    rho: float

    def __len__(self) -> int:
        return self.alpha.shape[0]


def sample_joint_exponents(
    m: int,
    n: int,
    snr: float,
    n_train: int,
    trials: int,
    rng: np.random.Generator,
) -> JointExponentSamples:
    """Draw channels, train at power snr, return both exponent vectors."""
    if snr < 1e3:
        raise ValueError("need snr >= 1e3 for usable exponent resolution")
    if trials < 1:
        raise ValueError("need at least one trial")
    h = sample_rayleigh(m, n, rng, count=trials)
    c1, c2 = mmse_coefficients(m, snr, n_train)
    h_hat = c1 * h + c2 * sample_rayleigh(m, n, rng, count=trials)
    a = n_train * snr / m
    rho = 1.0 / np.sqrt(1.0 + 1.0 / a)
    return JointExponentSamples(
        alpha=eigen_exponents(h, snr),
        alpha_hat=eigen_exponents(h_hat, snr),
        snr=snr,
        rho=float(rho),
    )


def classify_event(alpha, alpha_hat, delta: float = 0.1):
    """Largest k whose E_k conditions hold with slack delta; None on boundary.

    Pairs i <= k must both clear the noise floor (min >= 1 - delta); pairs
    i > k must be delta-equal and stay below 1 + delta.  Exponents are
    clipped at zero first: eigenvalues above the SNR^0 scale all carry
    exponent zero, so a mildly negative draw is not a boundary event.
    """
    if not 0 < delta < 0.5:
        raise ValueError("slack must be in (0, 0.5)")
    alpha = np.maximum(np.asarray(alpha, dtype=float), 0.0)
    alpha_hat = np.maximum(np.asarray(alpha_hat, dtype=float), 0.0)
    m_n = alpha.shape[-1]
    above = np.minimum(alpha, alpha_hat) >= 1.0 - delta
    paired = (np.abs(alpha - alpha_hat) <= delta) & (
        np.maximum(alpha, alpha_hat) < 1.0 + delta
    )
    for k in range(m_n, -1, -1):
        ok = above[..., :k].all(axis=-1) & paired[..., k:].all(axis=-1)
        if alpha.ndim == 1:
            if ok:
                return k
        else:
            raise ValueError("classify_event takes one sample; use classify_events")
    return None


def classify_events(samples: JointExponentSamples, delta: float = 0.1) -> np.ndarray:
    """Vectorized classifier: class index per sample, -1 for the boundary band."""
    if not 0 < delta < 0.5:
        raise ValueError("slack must be in (0, 0.5)")
    alpha = np.maximum(samples.alpha, 0.0)
    alpha_hat = np.maximum(samples.alpha_hat, 0.0)
    m_n = alpha.shape[1]
    above = np.minimum(alpha, alpha_hat) >= 1.0 - delta
    paired = (np.abs(alpha - alpha_hat) <= delta) & (
        np.maximum(alpha, alpha_hat) < 1.0 + delta
    )
    out = np.full(len(samples), -1, dtype=int)
    undecided = np.ones(len(samples), dtype=bool)
    for k in range(m_n, -1, -1):
        ok = above[:, :k].all(axis=1) & paired[:, k:].all(axis=1) & undecided
        out[ok] = k
        undecided &= ~ok
    return out


@dataclass(frozen=True)
class ExponentRegion:
    """Axis-aligned box in joint exponent space, one interval per index."""

    alpha_lo: tuple[float, ...]
    alpha_hi: tuple[float, ...]
    alpha_hat_lo: tuple[float, ...]
    alpha_hat_hi: tuple[float, ...]

    def __post_init__(self):
        k = len(self.alpha_lo)
        if not (len(self.alpha_hi) == len(self.alpha_hat_lo) == len(self.alpha_hat_hi) == k):
            raise ValueError("all bound vectors must share one length")
        for lo, hi in [(self.alpha_lo, self.alpha_hi), (self.alpha_hat_lo, self.alpha_hat_hi)]:
            if any(h < l for l, h in zip(lo, hi)):
                raise ValueError("empty interval in region")

    def contains(self, samples: JointExponentSamples) -> np.ndarray:
        a_lo = np.asarray(self.alpha_lo)
        a_hi = np.asarray(self.alpha_hi)
        b_lo = np.asarray(self.alpha_hat_lo)
        b_hi = np.asarray(self.alpha_hat_hi)
        inside = (samples.alpha >= a_lo) & (samples.alpha <= a_hi)
        inside &= (samples.alpha_hat >= b_lo) & (samples.alpha_hat <= b_hi)
        return inside.all(axis=1)

    def event_class(self) -> int:
        """Class index k this box sits in; rejects boxes straddling classes.

        Index i is above the floor when both intervals start at >= 1 and
        below when both end at <= 1 with overlapping alpha/alpha_hat ranges
        (the equality manifold must cross the box).
        """
        k = len(self.alpha_lo)
        above = []
        for i in range(k):
            a = (self.alpha_lo[i], self.alpha_hi[i])
            b = (self.alpha_hat_lo[i], self.alpha_hat_hi[i])
            if a[0] >= 1.0 - 1e-12 and b[0] >= 1.0 - 1e-12:
                above.append(True)
            elif a[1] <= 1.0 + 1e-12 and b[1] <= 1.0 + 1e-12:
                if max(a[0], b[0]) > min(a[1], b[1]):
                    raise ValueError(
                        f"index {i}: below-floor intervals do not overlap, "
                        "the region misses the equality manifold"
                    )
                above.append(False)
            else:
                raise ValueError(f"index {i} straddles the noise floor")
        if any(above[i] < above[i + 1] for i in range(k - 1)):
            raise ValueError("above-floor indices must form a prefix")
        return sum(above)


def predicted_region_exponent(region: ExponentRegion, m: int, n: int, step: float = 0.01) -> float:
    """Analytic decay exponent of P(sample in region): Laplace principle.

    Minimizes the class-k exponent over the box on a `step` grid; the
    exponent is linear with positive weights in every coordinate, so the
    grid minimum is exact.
    """
    k_class = region.event_class()
    nu = abs(n - m)
    m_n = len(region.alpha_lo)
    total = -k_class * (nu + k_class)
    for i in range(m_n):
        coeff = 2 * (i + 1) - 1 + nu
        grid = np.arange(region.alpha_lo[i], region.alpha_hi[i] + step / 2, step)
        total += float(np.min(coeff * grid))
    for i in range(k_class):
        coeff = 2 * (i + 1) - 1 + nu
        grid = np.arange(region.alpha_hat_lo[i], region.alpha_hat_hi[i] + step / 2, step)
        total += float(np.min(coeff * grid))
    return float(total)


def empirical_event_exponent(
    m: int,
    n: int,
    snr_grid,
    region: ExponentRegion,
    trials_per_snr: int,
    rng: np.random.Generator,
    n_train: int = 10,
) -> tuple[float, float, list]:
    """Fit the SNR slope of the empirical region probability vs the prediction.

    Returns (fitted slope, predicted exponent, per-snr [(snr, hits, trials,
    ci_low, ci_high)]).  The region must sit strictly inside one class.
    """
    snr_grid = list(snr_grid)
    if len(snr_grid) < 3:
        raise ValueError("need at least 3 SNR points for a slope")
    predicted = predicted_region_exponent(region, m, n)
    rows = []
    probs = []
    for snr in snr_grid:
        samples = sample_joint_exponents(m, n, snr, n_train, trials_per_snr, rng)
        hits = int(np.count_nonzero(region.contains(samples)))
        lo, hi = wilson_interval(hits, trials_per_snr)
        rows.append((snr, hits, trials_per_snr, lo, hi))
        probs.append(hits / trials_per_snr)
    if any(p == 0 for p in probs):
        raise ValueError("region starved at some SNR; enlarge trials or lower snr")
    x = np.log10(snr_grid)
    y = -np.log10(probs)
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, predicted, rows
