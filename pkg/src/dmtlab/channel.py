"""Complex Rayleigh fading primitives: sampling, MMSE training, mutual information.

Channel matrices are plain complex ndarrays of shape (n, m) with receive
antennas on the rows; every function here also accepts stacked batches of
shape (..., n, m) so the Monte Carlo engine and single-shot callers share
one code path.  All randomness flows through an explicit numpy Generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LN2 = np.log(2.0)
_EIG_FLOOR = 1e-300  # keeps exponents finite for numerically zero eigenvalues


@dataclass(frozen=True)
class MimoConfig:
    """System dimensions and operating point for one simulated link.

    snr is linear (> 1 so that log snr > 0), r is the multiplexing gain,
    k_levels the feedback cardinality, n_train the pilot length per round,
    epsilon the rate-margin exponent used by estimated-CSI index rules.
    t_coh is informational only (no time-overhead accounting happens here).
    """

    m: int
    n: int
    snr: float
    r: float
    k_levels: int = 2
    n_train: int = 10
    epsilon: float = 0.05
    const_fb_c: float = 1.0
    t_coh: int | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("antenna counts must be >= 1")
        if self.snr <= 1:
            raise ValueError("linear snr must exceed 1")
        if not 0 <= self.r < min(self.m, self.n):
            raise ValueError("need 0 <= r < min(m, n)")
        if self.k_levels < 1:
            raise ValueError("k_levels must be >= 1")
        if self.n_train < self.m:
            raise ValueError("pilot length must be >= m")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.const_fb_c <= 0:
            raise ValueError("const_fb_c must be positive")


def target_rate(snr: float, r: float) -> float:
    """Rate target in bits/use for multiplexing gain r at linear snr.

    Uses log2(1 + snr^r): the same SNR exponent as r*log2(snr) but without
    the low-SNR transient, so measured outage slopes settle near their
    asymptotes within the 10-30 dB window the simulations run in.
    """
    return float(np.log2(1.0 + snr**r))


def margin_rate(snr: float, r: float, epsilon: float) -> float:
    """Rate target plus the epsilon*log2(snr) estimation margin."""
    return target_rate(snr, r) + epsilon * float(np.log2(snr))


def sample_rayleigh(m: int, n: int, rng: np.random.Generator, count: int | None = None):
    """i.i.d. CN(0,1) channel draw(s) of shape (n, m), or (count, n, m)."""
    if m < 1 or n < 1:
        raise ValueError("antenna counts must be >= 1")
    shape = (n, m) if count is None else (count, n, m)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


def mmse_coefficients(m: int, p_train: float, n_train: int) -> tuple[float, float]:
    """Signal and noise mixing weights (c1, c2) of the pilot MMSE estimate.

    h_hat = c1 * h + c2 * w2 with w2 fresh unit-variance complex Gaussian;
    c1 = 1 / (1 + m/(N p)) and c2 = sqrt(N p / m) / (1 + N p / m).
    """
    a = n_train * p_train / m
    c1 = 1.0 / (1.0 + 1.0 / a)
    c2 = np.sqrt(a) / (1.0 + a)
    return c1, c2


@dataclass(frozen=True)
class EstimateResult:
    """MMSE channel estimate with its exact second-order statistics.

    rho is the per-entry correlation between h and h_hat and error_variance
    the per-entry variance of h - h_hat; pilot_noise is the w2 draw, kept so
    h can be reconstructed exactly from (h_hat, pilot_noise).
    """

    h_hat: np.ndarray
    rho: float
    error_variance: float
    pilot_noise: np.ndarray


def mmse_estimate(
    h: np.ndarray, p_train: float, n_train: int, rng: np.random.Generator
) -> EstimateResult:
    """Estimate h from an N-use pilot at power p_train per use."""
    if p_train <= 0:
        raise ValueError("training power must be positive")
    m = h.shape[-1]
    n = h.shape[-2]
    if n_train < m:
        raise ValueError("pilot length must be >= m")
    c1, c2 = mmse_coefficients(m, p_train, n_train)
    count = None if h.ndim == 2 else int(np.prod(h.shape[:-2]))
    w2 = sample_rayleigh(m, n, rng, count=count).reshape(h.shape)
    h_hat = c1 * h + c2 * w2
    a = n_train * p_train / m
    rho = 1.0 / np.sqrt(1.0 + 1.0 / a)
    error_variance = 1.0 / (1.0 + a)
    return EstimateResult(h_hat, float(rho), float(error_variance), w2)


def mutual_information(h: np.ndarray, p) -> np.ndarray | float:
    """log2 det(I + (p/m) H H^dag) in bits per channel use.

    Accepts stacked channels (..., n, m) and broadcastable p (per-channel
    powers).  For rank-one links the determinant reduces to the Frobenius
    norm, which the hot Monte Carlo path relies on.
    """
    h = np.asarray(h)
    m = h.shape[-1]
    n = h.shape[-2]
    p = np.asarray(p, dtype=float)
    scale = p / m
    if min(m, n) == 1:
        gain = np.sum(np.abs(h) ** 2, axis=(-2, -1))
        out = np.log2(1.0 + scale * gain)
    else:
        gram = _small_gram(h)
        k = gram.shape[-1]
        a = np.eye(k) + scale[..., None, None] * gram
        _, logdet = np.linalg.slogdet(a)
        out = logdet / _LN2
    return float(out) if out.ndim == 0 else out


def effective_mutual_information(
    h_hat2: np.ndarray, h_tilde: np.ndarray, p
) -> np.ndarray | float:
    """Rate supported when the residual estimation error is treated as noise.

    log2 det(I + (p/m) Hhat2 Hhat2^dag / (1 + p/(m n) tr(Htilde Htilde^dag)));
    equal to mutual_information(h_hat2, p) when h_tilde is zero.
    """
    h_hat2 = np.asarray(h_hat2)
    h_tilde = np.asarray(h_tilde)
    if h_tilde.shape != h_hat2.shape:
        raise ValueError("estimate and error must have the same shape")
    m = h_hat2.shape[-1]
    n = h_hat2.shape[-2]
    p = np.asarray(p, dtype=float)
    inflation = 1.0 + (p / (m * n)) * np.sum(np.abs(h_tilde) ** 2, axis=(-2, -1))
    return mutual_information(h_hat2, p / inflation)


def eigen_exponents(h: np.ndarray, snr: float) -> np.ndarray:
    """Negative SNR exponents of the nonzero eigenvalues of H H^dag.

    Returns min(m, n) exponents sorted descending (deepest fade first);
    eigenvalues are floored at 1e-300 so rank-deficient draws stay finite.
    """
    if snr <= 1:
        raise ValueError("need snr > 1 so that log snr > 0")
    h = np.asarray(h)
    gram = _small_gram(h)
    lam = np.linalg.eigvalsh(gram)  # ascending
    lam = np.clip(lam, _EIG_FLOOR, None)
    return -np.log(lam) / np.log(snr)  # descending in alpha


def _small_gram(h: np.ndarray) -> np.ndarray:
    """Hermitian Gram matrix on the smaller side, shape (..., k, k)."""
    m = h.shape[-1]
    n = h.shape[-2]
    hc = np.conj(np.swapaxes(h, -1, -2))
    return h @ hc if n <= m else hc @ h
