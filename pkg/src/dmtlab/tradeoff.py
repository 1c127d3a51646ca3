"""Exact diversity-multiplexing tradeoff curves for MIMO links with quantized feedback.

All tradeoffs are derived from the coherent outage curve of an m x n
Rayleigh-fading link at transmit power ~ SNR^p, which is piecewise linear
through the points (k*p, p*(m-k)*(n-k)) for k = 0..min(m,n).  Everything
else in this module is breakpoint arithmetic and small exact max-min
solves on top of that curve; no Monte Carlo is involved.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DmtCurve",
    "FeedbackExponents",
    "coherent_tradeoff",
    "coherent_tradeoff_curve",
    "perfect_feedback_tradeoff",
    "constant_power_feedback_tradeoff",
    "power_controlled_feedback_tradeoff",
    "power_controlled_feedback_grid_search",
    "power_controlled_feedback_tradeoff_relaxed",
    "training_tradeoff",
    "mac_tradeoff",
    "mac_minimizing_subset",
    "mac_feedback_tradeoff",
    "time_scaled_multiplexing",
]


@dataclass(frozen=True)
class DmtCurve:
    """Piecewise-linear diversity-vs-multiplexing curve.

    Breakpoints are (r, d) pairs with r strictly increasing and d
    nonincreasing; evaluation between breakpoints is linear interpolation.
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        rs = [b[0] for b in self.breakpoints]
        ds = [b[1] for b in self.breakpoints]
        if len(self.breakpoints) < 2:
            raise ValueError("need at least two breakpoints")
        if any(r2 <= r1 for r1, r2 in zip(rs, rs[1:])):
            raise ValueError("breakpoint multiplexing gains must be strictly increasing")
        if any(d2 > d1 + 1e-12 for d1, d2 in zip(ds, ds[1:])):
            raise ValueError("diversity must be nonincreasing in r")
        if ds[-1] < -1e-12:
            raise ValueError("diversity must stay nonnegative")

    @property
    def r_max(self) -> float:
        return self.breakpoints[-1][0]

    def __call__(self, r: float) -> float:
        if r < -1e-12 or r > self.r_max + 1e-12:
            raise ValueError(f"multiplexing gain {r} outside [0, {self.r_max}]")
        rs = np.array([b[0] for b in self.breakpoints])
        ds = np.array([b[1] for b in self.breakpoints])
        return float(np.interp(r, rs, ds))


def coherent_tradeoff_curve(p: float, m: int, n: int) -> DmtCurve:
    """Outage-exponent curve of a coherent m x n link at power exponent p."""
    if p <= 0:
        raise ValueError("power exponent p must be positive")
    if m < 1 or n < 1:
        raise ValueError("antenna counts must be >= 1")
    k_max = min(m, n)
    pts = tuple((k * p, p * (m - k) * (n - k)) for k in range(k_max + 1))
    return DmtCurve(pts)


def coherent_tradeoff(r: float, p: float, m: int, n: int) -> float:
    """Diversity of a coherent m x n link at multiplexing r and power exponent p.

    Scaling identity: coherent_tradeoff(r, p) == p * coherent_tradeoff(r/p, 1).
    """
    curve = coherent_tradeoff_curve(p, m, n)
    if r > curve.r_max + 1e-12:
        raise ValueError(f"r={r} exceeds p*min(m,n)={curve.r_max}")
    return curve(min(r, curve.r_max))


def _check_r(r: float, m: int, n: int) -> None:
    if not 0 <= r < min(m, n):
        raise ValueError(f"multiplexing gain must satisfy 0 <= r < min(m,n)={min(m, n)}")


def perfect_feedback_tradeoff(r: float, k_levels: int, m: int, n: int) -> float:
    """Tradeoff with perfect receiver CSI and noiseless K-level index feedback.

    Defined by the recursion d(K) = coherent_tradeoff(r, 1 + d(K-1)) with
    d(0) = 0; at r = 0 this telescopes to sum_{g=1..K} (mn)^g.
    """
    if k_levels < 1:
        raise ValueError("k_levels must be >= 1")
    _check_r(r, m, n)
    d = 0.0
    for _ in range(k_levels):
        d = coherent_tradeoff(r, 1.0 + d, m, n)
    return d


def constant_power_feedback_tradeoff(r: float, k_levels: int, m: int, n: int) -> float:
    """Tradeoff when the feedback index rides a constant-power reverse link.

    The reverse link behaves as a non-coherent m x n channel whose error
    probability decays no faster than SNR^-mn, which caps the gain at
    mn + coherent_tradeoff(r, 1); the recursion term tracks how far the
    forward power laddering can climb before that cap binds.
    """
    if k_levels <= 1:
        raise ValueError("constant-power feedback needs k_levels > 1")
    _check_r(r, m, n)
    mn = m * n
    b = 0.0
    for _ in range(k_levels):
        b = coherent_tradeoff(r, 1.0 + min(mn, b), m, n)
    return min(b, mn + coherent_tradeoff(r, 1.0, m, n))


@dataclass(frozen=True)
class FeedbackExponents:
    """Reverse-link power exponents q_0..q_{K-1} for index-in-energy feedback.

    Under the ordered scheme q is nondecreasing with q_j <= 1 + d(r, j),
    where d is the perfect-feedback recursion; ties mean the extra level
    adds nothing at that multiplexing gain.
    """

    q: tuple[float, ...]
    ordered: bool = True


def _ladder(r: float, k_levels: int, m: int, n: int) -> list[float]:
    """[d(r,0)=0, d(r,1), ..., d(r,k_levels)] of the perfect-feedback recursion."""
    d = [0.0]
    for _ in range(k_levels):
        d.append(coherent_tradeoff(r, 1.0 + d[-1], m, n))
    return d


def _ordered_optimum(d: list[float], mn: int, k_levels: int) -> float:
    """Exact sup of min_i [mn*(q_i - q_{i-1}) + d_i] over ordered capped q.

    With q_0 = 0 and caps q_i <= 1 + d_i, a target t is feasible iff
    sum_{j<=i} (t - d_j)^+ <= mn*(1 + d_i) for every i = 1..K-1.  Each
    constraint is piecewise linear and increasing in t, so its root is
    found exactly by scanning segments; the optimum is the smallest root.
    """
    roots = []
    for i in range(1, k_levels):
        budget = mn * (1.0 + d[i])
        thresholds = d[1 : i + 1]  # nondecreasing
        root = None
        for c in range(1, i + 1):
            # segment where exactly the first c thresholds are active
            t = (budget + sum(thresholds[:c])) / c
            lo = thresholds[c - 1]
            hi = thresholds[c] if c < i else np.inf
            if lo - 1e-12 <= t <= hi + 1e-12:
                root = t
                break
        assert root is not None
        roots.append(root)
    return min(roots)


def power_controlled_feedback_tradeoff(
    r: float, k_levels: int, m: int, n: int
) -> tuple[float, FeedbackExponents]:
    """Tradeoff with power-controlled (energy-keyed) index feedback, ordered levels.

    Solves min(d(r,K), max_q min_i [mn*((q_i)^+ - (q_{i-1})^+) + d(r,i)])
    exactly, with q_0 = 0 and caps q_i <= 1 + d(r,i).  Returns the achieved
    diversity and a maximizing exponent vector; for K = 2 the optimum is
    q_1 = 1 + d(r,1) and the value collapses to the one-bit perfect-feedback
    curve, and for r -> 0 the value saturates at mn*(mn + 2) for all K >= 3.
    """
    if k_levels <= 1:
        raise ValueError("power-controlled feedback needs k_levels > 1")
    _check_r(r, m, n)
    mn = m * n
    d = _ladder(r, k_levels, m, n)
    t_star = _ordered_optimum(d, mn, k_levels)
    diversity = min(d[k_levels], t_star)

    # Maximal exponents achieving `diversity`: fill from the top cap down,
    # giving each detection gap just enough room for its error term.
    q = [0.0] * k_levels
    q[k_levels - 1] = 1.0 + d[k_levels - 1]
    for i in range(k_levels - 2, 0, -1):
        need = max(diversity - d[i + 1], 0.0) / mn
        q[i] = min(1.0 + d[i], q[i + 1] - need)
    return diversity, FeedbackExponents(tuple(q))


def power_controlled_feedback_grid_search(
    r: float, k_levels: int, m: int, n: int, step: float = 0.05
) -> float:
    """Lattice-search oracle for the ordered feedback-exponent max-min.

    Searches gap variables delta_i = q_i - q_{i-1} on a `step` lattice.  Any
    gap pushing its term above the i=1 cap mn*(1+d_1)+d_1 cannot raise the
    min, so each gap range is clamped there; this keeps the search exact up
    to lattice resolution while staying independent of the closed-form path.
    """
    if k_levels <= 1:
        raise ValueError("needs k_levels > 1")
    _check_r(r, m, n)
    mn = m * n
    d = _ladder(r, k_levels, m, n)
    t_bound = mn * (1.0 + d[1]) + d[1]
    caps = [1.0 + d[i] for i in range(1, k_levels)]

    grids = []
    for i in range(1, k_levels):
        hi = min(caps[i - 1], max(t_bound - d[i], 0.0) / mn + 2 * step)
        grids.append(np.arange(0.0, hi + step / 2, step))

    best = -np.inf

    def recurse(level: int, q_prev: float, cur_min: float) -> None:
        nonlocal best
        if cur_min <= best:
            return
        if level == k_levels:
            best = max(best, cur_min)
            return
        for gap in grids[level - 1]:
            q_i = q_prev + gap
            if q_i > caps[level - 1] + 1e-12:
                break
            term = mn * gap + d[level]
            recurse(level + 1, q_i, min(cur_min, term))

    recurse(1, 0.0, np.inf)
    return min(d[k_levels], best)


def power_controlled_feedback_tradeoff_relaxed(
    r: float,
    k_levels: int,
    m: int,
    n: int,
    step: float = 0.05,
    q_cap: float | None = None,
) -> float:
    """Lattice search over *unordered* distinct feedback exponents.

    Feasible assignments must keep every level's received-index probability
    times its power within the reverse-link budget:
        q_j <= 1 + min(d_j, min over earlier i with q_i > q_j of
                        d_i + mn*(q_i - q_j)).
    The value of an assignment is the worst error pair (j < i, q_j < q_i),
    taken as mn*(q_i - q_j) + d_i, and +inf when no such pair exists; the
    result is capped by the perfect-feedback bound.  The lattice makes this
    an approximation of the sup from below.
    """
    if k_levels <= 1:
        raise ValueError("needs k_levels > 1")
    _check_r(r, m, n)
    mn = m * n
    d = _ladder(r, k_levels, m, n)
    if q_cap is None:
        q_cap = 1.0 + d[k_levels]
    grid = np.arange(0.0, q_cap + step / 2, step)

    best = -np.inf
    for q in itertools.product(grid, repeat=k_levels):
        if len(set(q)) != k_levels:
            continue
        feasible = True
        for j in range(k_levels):
            cap = 1.0 + d[j]
            for i in range(j):
                if q[i] > q[j]:
                    cap = min(cap, 1.0 + d[i] + mn * (q[i] - q[j]))
            if q[j] > cap + 1e-9:
                feasible = False
                break
        if not feasible:
            continue
        value = np.inf
        for i in range(1, k_levels):
            for j in range(i):
                if q[j] < q[i]:
                    value = min(value, mn * (q[i] - q[j]) + d[i])
        best = max(best, value)
    return float(min(d[k_levels], best))


def training_tradeoff(r: float, m: int, n: int, power_controlled: bool) -> float:
    """Tradeoff with MMSE-trained receiver CSI and noiseless index feedback.

    Constant-power training pins the estimate resolution to the data SNR and
    feedback buys nothing: the curve stays at coherent_tradeoff(r, 1).  A
    second, feedback-directed training round lifts it to the one-bit
    perfect-feedback curve coherent_tradeoff(r, 1 + coherent_tradeoff(r, 1)).
    """
    _check_r(r, m, n)
    base = coherent_tradeoff(r, 1.0, m, n)
    if not power_controlled:
        return base
    return coherent_tradeoff(r, 1.0 + base, m, n)


def _check_mac_rates(r_vec, p: float, m: int, n: int) -> None:
    users = len(r_vec)
    if users < 1:
        raise ValueError("need at least one user")
    if any(ri < 0 for ri in r_vec):
        raise ValueError("multiplexing gains must be nonnegative")
    for size in range(1, users + 1):
        for subset in itertools.combinations(range(users), size):
            r_sum = sum(r_vec[i] for i in subset)
            if r_sum > p * min(size * m, n) + 1e-12:
                raise ValueError(
                    f"subset {subset} rate sum {r_sum} exceeds "
                    f"p*min(|S|m,n)={p * min(size * m, n)}"
                )


def mac_tradeoff(r_vec, p: float, m: int, n: int) -> float:
    """Multiple-access outage exponent at common power exponent p.

    Exact minimum over all 2^L - 1 nonempty user subsets S of the coherent
    tradeoff of the stacked |S|m x n link at the subset's sum rate.
    """
    _check_mac_rates(r_vec, p, m, n)
    value, _ = _mac_min(r_vec, p, m, n)
    return value


def mac_minimizing_subset(r_vec, p: float, m: int, n: int) -> tuple[int, ...]:
    """Subset attaining the mac_tradeoff minimum (smallest cardinality on ties)."""
    _check_mac_rates(r_vec, p, m, n)
    _, subset = _mac_min(r_vec, p, m, n)
    return subset


def _mac_min(r_vec, p: float, m: int, n: int) -> tuple[float, tuple[int, ...]]:
    users = len(r_vec)
    best = np.inf
    best_subset: tuple[int, ...] = ()
    for size in range(1, users + 1):
        for subset in itertools.combinations(range(users), size):
            r_sum = sum(r_vec[i] for i in subset)
            val = coherent_tradeoff(r_sum, p, size * m, n)
            if val < best - 1e-15:
                best = val
                best_subset = subset
    return float(best), best_subset


def mac_feedback_tradeoff(r_vec, m: int, n: int) -> float:
    """Achievable MAC tradeoff of the one-bit power-controlled protocol.

    Two-stage evaluation: the common high power exponent is 1 + D(r, 1)
    with D the subset-min tradeoff, applied uniformly to all users.
    """
    base = mac_tradeoff(r_vec, 1.0, m, n)
    return mac_tradeoff(r_vec, 1.0 + base, m, n)


def time_scaled_multiplexing(r: float, t_coh: float, overhead_uses: float) -> float:
    """Multiplexing gain after charging `overhead_uses` of the coherence block.

    Hook for training/feedback time accounting: r -> r * T / (T - c).  No
    optimization over protocol or antenna count is performed here.
    """
    if overhead_uses >= t_coh:
        raise ValueError("overhead exceeds the coherence block")
    return r * t_coh / (t_coh - overhead_uses)
