"""Acceptance suite: every exit criterion at its stated tolerance.

Run with `pytest -v tests/test_acceptance.py` for one pass/fail line per
criterion; each test also prints the measured numbers.  The two slope
criteria execute tens of millions of trials and dominate the runtime
(minutes on one core).
"""

import dataclasses
import itertools

import numpy as np
import pytest
from scipy import stats as st

from dmtlab.channel import MimoConfig
from dmtlab.cli import main
from dmtlab.exponents import sample_joint_exponents
from dmtlab.feedback import FeedbackPolicy, sample_rayleigh, transmit_feedback_power_controlled
from dmtlab.mac import MacConfig, estimate_mac_outage
from dmtlab.simulate import (
    Scenario,
    _run_batch,
    calibrate_power_levels,
    estimate_diversity_slope,
    estimate_outage,
    sweep_outage,
)
from dmtlab.tradeoff import (
    coherent_tradeoff,
    constant_power_feedback_tradeoff,
    mac_feedback_tradeoff,
    mac_tradeoff,
    perfect_feedback_tradeoff,
    power_controlled_feedback_grid_search,
    power_controlled_feedback_tradeoff,
    training_tradeoff,
)


def report(name: str, detail: str) -> None:
    print(f"[acceptance] {name}: {detail} -> PASS")


# ---------------------------------------------------------------- analytic


class TestAnalyticGoldenValues:
    def test_coherent_operating_points(self):
        assert coherent_tradeoff(0.2, 1.0, 1, 1) == pytest.approx(0.8, abs=1e-9)
        assert coherent_tradeoff(0.2, 1.8, 1, 1) == pytest.approx(1.6, abs=1e-9)
        assert coherent_tradeoff(0.5, 1.0, 1, 2) == pytest.approx(1.0, abs=1e-9)
        assert coherent_tradeoff(0.5, 2.0, 1, 2) == pytest.approx(3.0, abs=1e-9)
        report("coherent golden values", "G(.2,1)=0.8 G(.2,1.8)=1.6 G(.5,1)=1 G(.5,2)=3")

    def test_perfect_feedback_closed_form(self):
        worst = 0.0
        for m, n, k in itertools.product(range(1, 4), range(1, 4), range(1, 5)):
            expect = sum((m * n) ** g for g in range(1, k + 1))
            got = perfect_feedback_tradeoff(0.0, k, m, n)
            worst = max(worst, abs(got - expect))
            assert got == pytest.approx(expect, abs=1e-9)
        report("perfect-feedback closed form", f"max |err| = {worst:.2e}")

    def test_constant_power_feedback_cap(self):
        for m, n, k in itertools.product(range(1, 4), range(1, 4), range(2, 5)):
            got = constant_power_feedback_tradeoff(0.0, k, m, n)
            assert got == pytest.approx(2 * m * n, abs=1e-9)
        report("constant-power feedback cap", "d(0) = 2mn for m,n<=3, K=2..4")

    def test_one_bit_power_controlled_curve(self):
        for m, n in [(1, 1), (1, 2), (2, 2), (2, 3)]:
            for r in np.linspace(0.0, min(m, n) * 0.98, 50):
                got, _ = power_controlled_feedback_tradeoff(float(r), 2, m, n)
                base = coherent_tradeoff(float(r), 1.0, m, n)
                expect = coherent_tradeoff(float(r), 1.0 + base, m, n)
                assert got == pytest.approx(expect, abs=1e-9)
        report("one-bit power-controlled curve", "50-point grid matches G(r,1+G(r,1))")

    def test_three_level_saturation(self):
        for m, n in itertools.product(range(1, 4), range(1, 4)):
            mn = m * n
            got, _ = power_controlled_feedback_tradeoff(0.0, 3, m, n)
            assert got == pytest.approx(mn * (mn + 2), abs=1e-9)
        report("three-level saturation", "d(0,3) = mn(mn+2) for m,n<=3")

    def test_mac_single_user_consistency(self):
        rng = np.random.default_rng(100)
        for _ in range(100):
            m = int(rng.integers(1, 4))
            n = int(rng.integers(1, 4))
            r = float(rng.uniform(0.0, min(m, n) * 0.999))
            assert mac_feedback_tradeoff((r,), m, n) == pytest.approx(
                training_tradeoff(r, m, n, True), abs=1e-12
            )
        report("mac single-user consistency", "100 random inputs exact")


# ---------------------------------------------------------------- slopes


class TestSimulationSlopes:
    def test_siso_r02_slopes(self):
        dbs = (10, 15, 20, 25, 30)
        grid = [10 ** (db / 10) for db in dbs]
        cfg = MimoConfig(m=1, n=1, snr=100.0, r=0.2)

        nofb = sweep_outage(Scenario.NO_FEEDBACK, cfg, grid, 1_000_000, seed=1001)
        slope_nofb, _ = estimate_diversity_slope(nofb)
        assert 0.65 <= slope_nofb <= 0.95

        trials = [1_000_000, 1_000_000, 2_000_000, 5_000_000, 10_000_000]
        main_pts = sweep_outage(
            Scenario.EST_CSIR_NOISY_FB_PC, cfg, grid, trials, seed=1002
        )
        slope_main, _ = estimate_diversity_slope(main_pts)
        assert 1.35 <= slope_main <= 1.85
        report(
            "SISO r=0.2 slopes",
            f"no-feedback {slope_nofb:.3f} in [0.65,0.95]; "
            f"main protocol {slope_main:.3f} in [1.35,1.85]",
        )

    def test_1x2_r05_desk_substitute(self):
        # the full slope-3 regime sits beyond ~22 dB and is not reachable by
        # plain Monte Carlo; the desk substitute checks slope >= 2 over
        # 10-20 dB with 1e8 total trials plus consistency of the fitted sweep
        # with the analytic snr^-3 law inside the 95% regression band
        dbs = (10, 15, 20)
        grid = [10 ** (db / 10) for db in dbs]
        cfg = MimoConfig(m=1, n=2, snr=100.0, r=0.5, epsilon=0.1)
        trials = [20_000_000, 30_000_000, 50_000_000]
        pts = sweep_outage(Scenario.EST_CSIR_NOISY_FB_PC, cfg, grid, trials, seed=1003)
        assert sum(p.trials for p in pts) == 10**8
        slope, _ = estimate_diversity_slope(pts)
        assert slope >= 2.0

        x = np.log10([p.snr for p in pts])
        y = -np.log10([p.p_hat for p in pts])
        coef = np.polyfit(x, y, 1)
        resid = y - np.polyval(coef, x)
        dof = len(x) - 2
        s = np.sqrt(np.sum(resid**2) / dof)
        sxx = np.sum((x - x.mean()) ** 2)
        half = st.t.ppf(0.975, dof) * s * np.sqrt(1 / len(x) + (x - x.mean()) ** 2 / sxx)
        band_lo = np.polyval(coef, x) - half
        band_hi = np.polyval(coef, x) + half
        # a line of slope exactly 3 (free constant) must fit inside the band
        lo_c = np.max(band_lo - 3 * x)
        hi_c = np.min(band_hi - 3 * x)
        assert lo_c <= hi_c
        report(
            "1x2 r=0.5 desk substitute",
            f"slope {slope:.3f} >= 2.0 over 10-20 dB (1e8 trials); "
            f"snr^-3 line fits the 95% regression band "
            f"(intercepts [{lo_c:.3f}, {hi_c:.3f}])",
        )


# ---------------------------------------------------------------- properties


class TestPropertySuites:
    def test_power_budgets(self):
        worst = 0.0
        for scenario in Scenario:
            for db in (15, 20, 25):
                cfg = MimoConfig(m=1, n=1, snr=10 ** (db / 10), r=0.2, epsilon=0.1)
                est = estimate_outage(scenario, cfg, 100_000, seed=2001)
                ratio = max(est.mean_fwd_power, est.mean_fb_power) / cfg.snr
                worst = max(worst, ratio)
                assert est.mean_fwd_power <= 1.05 * cfg.snr
                assert est.mean_fb_power <= 1.05 * cfg.snr
        report("power budgets", f"worst mean power / snr = {worst:.3f} <= 1.05")

    def test_constant_training_futility(self):
        # single-use pilot: the no-advantage statement is about the
        # exponent, and an N-use pilot shifts the level by ~1/N
        ratios = []
        for db in (20, 25, 30):
            cfg = MimoConfig(m=1, n=1, snr=10 ** (db / 10), r=0.2, n_train=1)
            p_ct = estimate_outage(
                Scenario.EST_CSIR_NOISELESS_FB_CONST_TRAIN, cfg, 1_000_000, seed=2002
            ).p_hat
            p_nofb = estimate_outage(Scenario.NO_FEEDBACK, cfg, 1_000_000, seed=2003).p_hat
            ratios.append(p_ct / p_nofb)
            assert p_ct <= 3 * p_nofb
            assert p_ct >= p_nofb / 3
        report(
            "constant-training futility",
            "ratios at 20/25/30 dB: " + ", ".join(f"{v:.2f}" for v in ratios),
        )

    def test_misdetection_slope_and_asymmetry(self):
        rng = np.random.default_rng(2004)
        q1, eps = 1.0, 0.05
        slopes = {}
        for m, n, trials in [(1, 1, 400_000), (1, 2, 2_000_000)]:
            snrs = [10.0, 10**1.5, 100.0]
            rates = []
            for snr in snrs:
                pol = FeedbackPolicy(levels=(0.0, snr**q1), snr=snr, epsilon=eps)
                h_f = sample_rayleigh(n, m, rng, count=trials)
                out = transmit_feedback_power_controlled(
                    np.ones(trials, dtype=int), pol, h_f, rng
                )
                rates.append(np.mean(out.j_t == 0))
            slope = float(np.polyfit(np.log10(snrs), -np.log10(rates), 1)[0])
            slopes[(m, n)] = slope
            assert slope == pytest.approx(m * n * q1, abs=0.4)

        asym = []
        for db in (20, 25):
            cfg = MimoConfig(m=1, n=1, snr=10 ** (db / 10), r=0.2, epsilon=0.1)
            pol = calibrate_power_levels(Scenario.EST_CSIR_NOISY_FB_PC, cfg, seed=2005)
            assert pol.feedback.exponents[1] >= 1.0
            rng2 = np.random.default_rng(2006)
            out = _run_batch(Scenario.EST_CSIR_NOISY_FB_PC, cfg, pol, rng2, 1_000_000)
            up = np.mean(out["j_t"] > out["j_r"])
            down = np.mean(out["j_t"] < out["j_r"])
            asym.append((up, down))
            assert up < down
        report(
            "feedback misdetection slope / asymmetry",
            f"slopes {slopes} within +-0.4 of mn*q1; "
            + "; ".join(f"up {u:.2e} < down {d:.2e}" for u, d in asym),
        )

    def test_exponent_pairing(self):
        rng = np.random.default_rng(2007)
        fracs = {}
        for m, n in [(1, 1), (2, 2)]:
            s = sample_joint_exponents(m, n, 1e6, 10, 300_000, rng)
            sel = (s.alpha < 0.9).all(axis=1)
            agree = np.max(np.abs(s.alpha[sel] - s.alpha_hat[sel]), axis=1) < 0.1
            fracs[(m, n)] = float(np.mean(agree))
            assert np.mean(agree) >= 0.99
        report(
            "exponent pairing at 60 dB",
            ", ".join(f"{k}: {v:.5f}" for k, v in fracs.items()) + " >= 0.99",
        )

    def test_deterministic_csv_across_parallelism(self, tmp_path):
        args = [
            "sim", "--scenario", "est-csir-noisy-fb-pc", "--m", "1", "--n", "1",
            "--r", "0.2", "--snr-db", "15,20", "--trials", "200000",
            "--seed", "77", "--pilot-trials", "20000",
        ]
        out1 = tmp_path / "p1.csv"
        out8 = tmp_path / "p8.csv"
        assert main(args + ["--parallelism", "1", "-o", str(out1)]) == 0
        assert main(args + ["--parallelism", "8", "-o", str(out8)]) == 0
        assert out1.read_bytes() == out8.read_bytes()
        report("determinism", "byte-identical CSV at parallelism 1 and 8")

    def test_brute_force_oracles(self):
        rng = np.random.default_rng(2008)
        # mac_tradeoff against direct subset enumeration, exact
        for _ in range(50):
            l_users = int(rng.integers(1, 4))
            m = int(rng.integers(1, 3))
            n = int(rng.integers(1, 4))
            p = float(rng.uniform(0.5, 2.5))
            while True:
                r_vec = tuple(float(v) for v in rng.uniform(0, 0.4, size=l_users))
                try:
                    got = mac_tradeoff(r_vec, p, m, n)
                    break
                except ValueError:
                    continue
            oracle = min(
                coherent_tradeoff(
                    sum(r_vec[i] for i in subset), p, len(subset) * m, n
                )
                for size in range(1, l_users + 1)
                for subset in itertools.combinations(range(l_users), size)
            )
            assert got == oracle

        # closed-form ordered optimizer against the 0.05-step lattice search
        worst = 0.0
        for m, n in [(1, 1), (1, 2), (2, 1), (2, 2)]:
            for k in (2, 3, 4):
                for r in (0.0, 0.25, 0.5):
                    exact, _ = power_controlled_feedback_tradeoff(r, k, m, n)
                    grid = power_controlled_feedback_grid_search(r, k, m, n, step=0.05)
                    worst = max(worst, abs(exact - grid))
                    assert abs(exact - grid) <= 0.05 + 1e-9
        report(
            "brute-force oracles",
            f"mac enumeration exact on 50 draws; "
            f"ordered-exponent solver vs lattice max |gap| = {worst:.3f} <= 0.05",
        )


# ----------------------------------------------------- desk-scale MAC slope


class TestMacSlope:
    def test_two_user_low_snr_segment(self):
        # full slope 6 is unreachable by plain MC; over the reachable 10-15 dB
        # segment the protocol must beat 1.5x the single-user no-feedback slope
        dbs = (10, 12.5, 15)
        su_cfg = MimoConfig(m=1, n=2, snr=100.0, r=0.0)
        su_pts = sweep_outage(
            Scenario.NO_FEEDBACK, su_cfg, [10 ** (db / 10) for db in dbs],
            2_000_000, seed=3001,
        )
        su_slope, _ = estimate_diversity_slope(su_pts)

        pts = []
        for idx, (db, trials) in enumerate(zip(dbs, (2_000_000, 3_000_000, 7_000_000))):
            cfg = MacConfig(
                l_users=2, m=1, n=2, snr=10 ** (db / 10), r_vec=(0.0, 0.0), epsilon=0.2
            )
            pts.append(estimate_mac_outage(cfg, trials, seed=3002 + idx))
        mac_slope, _ = estimate_diversity_slope(pts)
        assert mac_slope >= 1.5 * su_slope
        report(
            "two-user MAC desk slope",
            f"mac {mac_slope:.2f} >= 1.5 x single-user {su_slope:.2f} "
            f"(>= {1.5 * su_slope:.2f}) over 10-15 dB, 1.2e7 trials",
        )
