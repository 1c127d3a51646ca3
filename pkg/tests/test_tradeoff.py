"""Analytic tradeoff curves against golden values and brute-force oracles."""

import itertools

import numpy as np
import pytest

from dmtlab.tradeoff import (
    DmtCurve,
    coherent_tradeoff,
    coherent_tradeoff_curve,
    constant_power_feedback_tradeoff,
    mac_feedback_tradeoff,
    mac_minimizing_subset,
    mac_tradeoff,
    perfect_feedback_tradeoff,
    power_controlled_feedback_grid_search,
    power_controlled_feedback_tradeoff,
    power_controlled_feedback_tradeoff_relaxed,
    time_scaled_multiplexing,
    training_tradeoff,
)


def exponent_minimization_oracle(r, p, m, n, step=0.005):
    """Brute-force inf of sum (2i-1+|n-m|) alpha_i over the outage region.

    Direct grid minimization of the eigenvalue-exponent cost subject to
    alpha_1 >= ... >= alpha_k >= 0 and sum (p - alpha_i)^+ <= r: the
    definition the breakpoint formula is supposed to solve.
    """
    k = min(m, n)
    coeff = np.array([2 * i - 1 + abs(n - m) for i in range(1, k + 1)], dtype=float)
    grid = np.arange(0.0, p + step, step)
    if k == 1:
        a = grid[np.maximum(p - grid, 0.0) <= r + 1e-12]
        return float(np.min(coeff[0] * a))
    assert k == 2
    a1, a2 = np.meshgrid(grid, grid, indexing="ij")
    ok = (a1 >= a2) & (np.maximum(p - a1, 0) + np.maximum(p - a2, 0) <= r + 1e-12)
    cost = coeff[0] * a1 + coeff[1] * a2
    return float(np.min(cost[ok]))


class TestCoherentTradeoff:
    def test_reported_operating_points(self):
        assert coherent_tradeoff(0.2, 1.0, 1, 1) == pytest.approx(0.8, abs=1e-9)
        assert coherent_tradeoff(0.2, 1.8, 1, 1) == pytest.approx(1.6, abs=1e-9)
        assert coherent_tradeoff(0.5, 1.0, 1, 2) == pytest.approx(1.0, abs=1e-9)
        assert coherent_tradeoff(0.5, 2.0, 1, 2) == pytest.approx(3.0, abs=1e-9)

    def test_endpoint_breakpoints(self):
        assert coherent_tradeoff(0.0, 1.0, 2, 2) == pytest.approx(4.0, abs=1e-12)
        for m, n, p in [(1, 1, 1.0), (2, 3, 2.5), (3, 3, 0.7)]:
            assert coherent_tradeoff(p * min(m, n), p, m, n) == pytest.approx(0.0, abs=1e-12)

    def test_matches_exponent_minimization_oracle(self):
        rng = np.random.default_rng(7)
        for m, n in [(1, 1), (1, 2), (2, 2), (2, 3)]:
            for _ in range(3):
                p = float(rng.uniform(0.3, 3.0))
                r = float(rng.uniform(0.0, p * min(m, n)))
                oracle = exponent_minimization_oracle(r, p, m, n)
                assert coherent_tradeoff(r, p, m, n) == pytest.approx(oracle, abs=0.05)

    def test_scaling_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            m = int(rng.integers(1, 5))
            n = int(rng.integers(1, 5))
            p = float(rng.uniform(0.1, 5.0))
            r = float(rng.uniform(0.0, p * min(m, n)))
            lhs = coherent_tradeoff(r, p, m, n)
            rhs = p * coherent_tradeoff(r / p, 1.0, m, n)
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            coherent_tradeoff(1.5, 1.0, 1, 1)
        with pytest.raises(ValueError):
            coherent_tradeoff(0.1, 0.0, 1, 1)
        with pytest.raises(ValueError):
            coherent_tradeoff(0.1, -1.0, 2, 2)

    def test_curve_invariants(self):
        curve = coherent_tradeoff_curve(2.0, 2, 3)
        assert curve.breakpoints == ((0.0, 12.0), (2.0, 4.0), (4.0, 0.0))
        assert curve(1.0) == pytest.approx(8.0)
        with pytest.raises(ValueError):
            DmtCurve(((0.0, 1.0), (0.0, 0.5)))
        with pytest.raises(ValueError):
            DmtCurve(((0.0, 1.0), (1.0, 2.0)))


class TestPerfectFeedback:
    def test_zero_multiplexing_closed_form(self):
        for m in range(1, 4):
            for n in range(1, 4):
                for k in range(1, 5):
                    expect = sum((m * n) ** g for g in range(1, k + 1))
                    got = perfect_feedback_tradeoff(0.0, k, m, n)
                    assert got == pytest.approx(expect, abs=1e-9)

    def test_single_level_is_no_feedback(self):
        for r in np.linspace(0, 0.99, 7):
            assert perfect_feedback_tradeoff(r, 1, 1, 2) == pytest.approx(
                coherent_tradeoff(r, 1.0, 1, 2), abs=1e-12
            )

    def test_monotone_in_levels(self):
        for r in [0.0, 0.3, 0.7]:
            vals = [perfect_feedback_tradeoff(r, k, 2, 2) for k in range(1, 6)]
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            perfect_feedback_tradeoff(1.0, 2, 1, 1)
        with pytest.raises(ValueError):
            perfect_feedback_tradeoff(0.2, 0, 1, 1)


class TestConstantPowerFeedback:
    def test_max_diversity_is_2mn(self):
        for m in range(1, 4):
            for n in range(1, 4):
                for k in range(2, 5):
                    got = constant_power_feedback_tradeoff(0.0, k, m, n)
                    assert got == pytest.approx(2 * m * n, abs=1e-9)

    def test_one_bit_1x2_starts_at_4(self):
        assert constant_power_feedback_tradeoff(0.0, 2, 1, 2) == pytest.approx(4.0, abs=1e-9)

    def test_vanishes_at_max_multiplexing(self):
        got = constant_power_feedback_tradeoff(0.999999, 3, 1, 1)
        assert got == pytest.approx(0.0, abs=1e-4)

    def test_rejects_single_level(self):
        with pytest.raises(ValueError):
            constant_power_feedback_tradeoff(0.2, 1, 1, 1)


class TestPowerControlledFeedback:
    def test_one_bit_equals_perfect_one_bit(self):
        for m, n in [(1, 1), (1, 2), (2, 2)]:
            for r in np.linspace(0.0, min(m, n) * 0.98, 50):
                got, exps = power_controlled_feedback_tradeoff(r, 2, m, n)
                base = coherent_tradeoff(r, 1.0, m, n)
                assert got == pytest.approx(coherent_tradeoff(r, 1.0 + base, m, n), abs=1e-9)
                assert exps.q[0] == 0.0
                assert exps.q[1] == pytest.approx(1.0 + base, abs=1e-12)

    def test_three_levels_reach_saturation(self):
        for m in range(1, 4):
            for n in range(1, 4):
                mn = m * n
                got, _ = power_controlled_feedback_tradeoff(0.0, 3, m, n)
                assert got == pytest.approx(mn * (mn + 2), abs=1e-9)

    def test_saturation_holds_for_more_levels(self):
        for k in range(3, 7):
            got, _ = power_controlled_feedback_tradeoff(0.0, k, 1, 2)
            assert got == pytest.approx(2 * (2 + 2), abs=1e-9)

    def test_frozen_four_level_point(self):
        # Hand-solved max-min for m=n=1, K=4, r=0.5: the budget chain binds at
        # q = (0, 1.25, 2, 2.25) giving 1.75 (the naive cap choice
        # q_j = 1 + d_j only reaches 1.5 here).
        got, _ = power_controlled_feedback_tradeoff(0.5, 4, 1, 1)
        assert got == pytest.approx(1.75, abs=1e-9)

    def test_exponent_vector_feasible(self):
        for m, n, k, r in [(1, 1, 3, 0.4), (1, 2, 4, 0.3), (2, 2, 4, 0.25)]:
            got, exps = power_controlled_feedback_tradeoff(r, k, m, n)
            d = [perfect_feedback_tradeoff(r, j, m, n) if j else 0.0 for j in range(k)]
            assert exps.q[0] == 0.0
            for j in range(1, k):
                assert exps.q[j] <= 1.0 + d[j] + 1e-9
                assert exps.q[j] >= exps.q[j - 1] - 1e-9
            # the returned exponents really achieve the returned diversity
            terms = [
                m * n * (max(exps.q[i], 0) - max(exps.q[i - 1], 0)) + d[i]
                for i in range(1, k)
            ]
            assert min(terms) >= got - 1e-9

    def test_against_grid_search_oracle(self):
        for m, n in [(1, 1), (1, 2), (2, 2)]:
            for k in (2, 3, 4):
                for r in (0.0, 0.25, 0.5):
                    exact, _ = power_controlled_feedback_tradeoff(r, k, m, n)
                    grid = power_controlled_feedback_grid_search(r, k, m, n, step=0.05)
                    assert abs(exact - grid) <= 0.05 + 1e-9

    def test_bounded_by_perfect_feedback(self):
        for k in (2, 3, 4):
            for r in np.linspace(0, 0.95, 9):
                got, _ = power_controlled_feedback_tradeoff(r, k, 1, 2)
                assert got <= perfect_feedback_tradeoff(r, k, 1, 2) + 1e-9

    def test_rejects_single_level(self):
        with pytest.raises(ValueError):
            power_controlled_feedback_tradeoff(0.2, 1, 1, 1)


class TestRelaxedPowerControlledFeedback:
    def test_two_levels_match_ordered(self):
        for m, n, r in [(1, 1, 0.2), (1, 2, 0.0)]:
            ordered, _ = power_controlled_feedback_tradeoff(r, 2, m, n)
            relaxed = power_controlled_feedback_tradeoff_relaxed(r, 2, m, n, step=0.05)
            assert relaxed == pytest.approx(ordered, abs=1e-9)

    def test_siso_three_levels_at_least_three(self):
        relaxed = power_controlled_feedback_tradeoff_relaxed(0.0, 3, 1, 1, step=0.1)
        assert relaxed >= 3.0 - 1e-9
        ordered, _ = power_controlled_feedback_tradeoff(0.0, 3, 1, 1)
        assert relaxed >= ordered - 1e-9

    def test_never_beats_perfect_feedback(self):
        for r in (0.0, 0.4):
            relaxed = power_controlled_feedback_tradeoff_relaxed(r, 3, 1, 1, step=0.1)
            assert relaxed <= perfect_feedback_tradeoff(r, 3, 1, 1) + 1e-9

    def test_rejects_single_level(self):
        with pytest.raises(ValueError):
            power_controlled_feedback_tradeoff_relaxed(0.2, 1, 1, 1)


class TestTrainingTradeoff:
    def test_power_controlled_golden_points(self):
        assert training_tradeoff(0.0, 1, 2, True) == pytest.approx(6.0, abs=1e-9)
        assert training_tradeoff(0.2, 1, 1, True) == pytest.approx(1.6, abs=1e-9)

    def test_constant_power_is_no_feedback(self):
        for r in np.linspace(0, 0.9, 10):
            assert training_tradeoff(r, 2, 2, False) == pytest.approx(
                coherent_tradeoff(r, 1.0, 2, 2), abs=1e-12
            )


class TestMacTradeoff:
    def test_single_user_reduces_to_coherent(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            m = int(rng.integers(1, 4))
            n = int(rng.integers(1, 4))
            p = float(rng.uniform(0.2, 3.0))
            r = float(rng.uniform(0.0, p * min(m, n)))
            assert mac_tradeoff((r,), p, m, n) == coherent_tradeoff(r, p, m, n)

    def test_two_user_subset_enumeration(self):
        # independent oracle: enumerate subsets by hand
        got = mac_tradeoff((0.0, 0.0), 1.0, 1, 2)
        oracle = min(
            coherent_tradeoff(0.0, 1.0, 1, 2),  # {1}, {2}
            coherent_tradeoff(0.0, 1.0, 2, 2),  # {1,2}
        )
        assert got == oracle == pytest.approx(2.0, abs=1e-12)

    def test_two_user_feedback_point(self):
        got = mac_feedback_tradeoff((0.0, 0.0), 1, 2)
        oracle = min(coherent_tradeoff(0.0, 3.0, 1, 2), coherent_tradeoff(0.0, 3.0, 2, 2))
        assert got == oracle == pytest.approx(6.0, abs=1e-12)

    def test_single_user_feedback_matches_training(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            m = int(rng.integers(1, 4))
            n = int(rng.integers(1, 4))
            r = float(rng.uniform(0.0, min(m, n) * 0.999))
            assert mac_feedback_tradeoff((r,), m, n) == pytest.approx(
                training_tradeoff(r, m, n, True), abs=1e-12
            )

    def test_max_rate_subset_hits_zero(self):
        assert mac_tradeoff((1.0,), 1.0, 1, 2) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_violated_subset_constraint(self):
        with pytest.raises(ValueError):
            mac_tradeoff((0.8, 0.8, 0.8), 1.0, 1, 2)  # {1,2,3}: 2.4 > min(3,2)

    def test_minimizing_subset_smallest_cardinality_on_tie(self):
        # r = (1, 0): {1} gives G_{1,2}(1,1)=0 and {1,2} gives G_{2,2}(1,1)=1
        assert mac_minimizing_subset((1.0, 0.0), 1.0, 1, 2) == (0,)
        # symmetric zero case ties across cardinalities at r=(0,...): G=2 vs 4
        assert mac_minimizing_subset((0.0, 0.0), 1.0, 1, 2) == (0,)


class TestCrossCurveProperties:
    def test_ordering_chain(self):
        for m, n in [(1, 1), (1, 2), (2, 2)]:
            for k in (2, 3):
                for r in np.linspace(0.0, min(m, n) * 0.95, 12):
                    no_fb = training_tradeoff(r, m, n, False)
                    cpf = constant_power_feedback_tradeoff(r, k, m, n)
                    pcf, _ = power_controlled_feedback_tradeoff(r, k, m, n)
                    perf = perfect_feedback_tradeoff(r, k, m, n)
                    assert no_fb <= cpf + 1e-9
                    assert cpf <= pcf + 1e-9
                    assert pcf <= perf + 1e-9

    def test_all_curves_nonincreasing_in_r(self):
        grid = np.linspace(0.0, 0.98, 25)
        curves = [
            lambda r: coherent_tradeoff(r, 1.0, 1, 2),
            lambda r: perfect_feedback_tradeoff(r, 3, 1, 2),
            lambda r: constant_power_feedback_tradeoff(r, 3, 1, 2),
            lambda r: power_controlled_feedback_tradeoff(r, 3, 1, 2)[0],
            lambda r: training_tradeoff(r, 1, 2, True),
        ]
        for curve in curves:
            vals = [curve(float(r)) for r in grid]
            assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))


def test_time_scaling_hook():
    assert time_scaled_multiplexing(0.5, 100.0, 2.0) == pytest.approx(0.5 * 100 / 98)
    with pytest.raises(ValueError):
        time_scaled_multiplexing(0.5, 10.0, 10.0)
