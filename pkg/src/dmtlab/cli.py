"""Command-line interface: analytic curves, simulation sweeps, verification, CSV out.

Exit codes: 0 success, 2 unusable configuration, 3 calibration hit the
rule-of-three floor somewhere (results are still written).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from dmtlab.channel import MimoConfig
from dmtlab.config import ConfigError, RunSpec, load_config
from dmtlab.exponents import ExponentRegion, empirical_event_exponent
from dmtlab.mac import MacConfig, calibrate_mac, estimate_mac_outage
from dmtlab.simulate import (
    Scenario,
    calibrate_power_levels,
    estimate_diversity_slope,
    sweep_outage,
)
from dmtlab.tradeoff import (
    coherent_tradeoff,
    constant_power_feedback_tradeoff,
    perfect_feedback_tradeoff,
    power_controlled_feedback_tradeoff,
    training_tradeoff,
)

_SIM_HEADER = (
    "snr_db,scenario,trials,outages,p_hat,ci_low,ci_high,"
    "mean_fwd_power,mean_fb_power,flag"
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(path: str, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _scenario_from_name(name: str) -> Scenario:
    key = name.strip().lower().replace("_", "-")
    for scenario in Scenario:
        if scenario.value == key:
            return scenario
    raise ConfigError(
        f"unknown scenario {name!r}; choose from "
        + ", ".join(s.value for s in Scenario)
    )


def _mimo_config(spec: RunSpec, snr: float) -> MimoConfig:
    try:
        return MimoConfig(
            m=spec.m,
            n=spec.n,
            snr=snr,
            r=spec.r,
            k_levels=spec.k_levels,
            n_train=spec.n_train,
            epsilon=spec.epsilon,
            const_fb_c=spec.const_fb_c,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_dmt(spec: RunSpec) -> int:
    """Emit every tradeoff-table row over an r grid."""
    m, n, k = spec.m, spec.n, spec.k_levels
    if m < 1 or n < 1 or k < 1:
        raise ConfigError("need m, n, k_levels >= 1")
    r_max = float(min(m, n))
    grid = spec.r_grid or tuple(np.linspace(0.0, r_max, 51))
    if any(r < 0 or r > r_max for r in grid):
        raise ConfigError(f"r grid must stay within [0, {r_max}]")

    def feedback_value(r: float, fn) -> float:
        if k == 1:
            return coherent_tradeoff(r, 1.0, m, n)
        if r >= r_max:
            return 0.0
        return fn(r)

    lines = ["r,scenario,diversity"]
    for r in grid:
        r = float(r)
        rows = {
            "no-feedback": coherent_tradeoff(r, 1.0, m, n),
            "perfect-csit": float("inf") if r < r_max else 0.0,
            "perfect-fb": feedback_value(r, lambda x: perfect_feedback_tradeoff(x, k, m, n)),
            "const-fb": feedback_value(
                r, lambda x: constant_power_feedback_tradeoff(x, k, m, n)
            ),
            "pc-fb": feedback_value(
                r, lambda x: power_controlled_feedback_tradeoff(x, k, m, n)[0]
            ),
            "const-train": coherent_tradeoff(r, 1.0, m, n),
            "pc-train": feedback_value(r, lambda x: training_tradeoff(x, m, n, True)),
            "main": feedback_value(r, lambda x: training_tradeoff(x, m, n, True)),
        }
        for label, value in rows.items():
            lines.append(f"{_fmt(r)},{label},{_fmt(value)}")
    _write_csv(spec.output, lines)
    return 0


def _sweep_rows(spec: RunSpec, points, scenario_label: str) -> tuple[list[str], int]:
    lines = []
    for db, pt in zip(spec.snr_db_list, points):
        lines.append(
            ",".join(
                [
                    _fmt(float(db)),
                    scenario_label,
                    str(pt.trials),
                    str(pt.outages),
                    _fmt(pt.p_hat),
                    _fmt(pt.ci_low),
                    _fmt(pt.ci_high),
                    _fmt(pt.mean_fwd_power),
                    _fmt(pt.mean_fb_power),
                    pt.flag,
                ]
            )
        )
    try:
        slope, stderr = estimate_diversity_slope(points)
        slope_fields = [
            _fmt(slope),
            _fmt(slope - 1.96 * stderr),
            _fmt(slope + 1.96 * stderr),
        ]
    except ValueError:
        slope_fields = ["", "", ""]
    total_trials = sum(p.trials for p in points)
    total_outages = sum(p.outages for p in points)
    mean_fwd = sum(p.mean_fwd_power * p.trials for p in points) / total_trials
    mean_fb = sum(p.mean_fb_power * p.trials for p in points) / total_trials
    flag = "low-confidence" if any(p.flag for p in points) else ""
    lines.append(
        ",".join(
            [
                "summary",
                scenario_label,
                str(total_trials),
                str(total_outages),
                *slope_fields,
                _fmt(mean_fwd),
                _fmt(mean_fb),
                flag,
            ]
        )
    )
    return lines, (3 if flag else 0)


def cmd_sim(spec: RunSpec) -> int:
    """Outage sweep for one scenario over the SNR grid plus a slope summary."""
    if spec.trials <= 0:
        raise ConfigError("trials must be positive")
    if not spec.snr_db_list:
        raise ConfigError("need at least one SNR point")
    scenario = _scenario_from_name(spec.scenario)
    snr_grid = [10 ** (db / 10) for db in spec.snr_db_list]
    if any(s <= 1 for s in snr_grid):
        raise ConfigError("SNR points must exceed 0 dB")
    config = _mimo_config(spec, snr_grid[0])
    try:
        points = sweep_outage(
            scenario,
            config,
            snr_grid,
            spec.trials_for_points(len(snr_grid)),
            seed=spec.seed,
            parallelism=spec.parallelism,
            pilot_trials=spec.pilot_trials,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    lines, code = _sweep_rows(spec, points, scenario.value)
    _write_csv(spec.output, [_SIM_HEADER] + lines)
    return code


def cmd_mac(spec: RunSpec) -> int:
    """Symmetric multiple-access union-outage sweep (common rate r per user)."""
    if spec.trials <= 0:
        raise ConfigError("trials must be positive")
    snr_grid = [10 ** (db / 10) for db in spec.snr_db_list]
    points = []
    trials = spec.trials_for_points(len(snr_grid))
    for idx, (snr, n_trials) in enumerate(zip(snr_grid, trials)):
        try:
            config = MacConfig(
                l_users=spec.l_users,
                m=spec.m,
                n=spec.n,
                snr=snr,
                r_vec=(spec.r,) * spec.l_users,
                k_levels=spec.k_levels,
                n_train=spec.n_train,
                epsilon=spec.epsilon,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        point_seed = int(
            np.random.SeedSequence(entropy=spec.seed, spawn_key=(idx,)).generate_state(1)[0]
        )
        points.append(
            estimate_mac_outage(
                config,
                n_trials,
                seed=point_seed,
                parallelism=spec.parallelism,
                pilot_trials=spec.pilot_trials,
            )
        )
    lines, code = _sweep_rows(spec, points, "mac")
    _write_csv(spec.output, [_SIM_HEADER] + lines)
    return code


def cmd_exponents(spec: RunSpec) -> int:
    """Empirical vs predicted exponent of one joint-exponent region."""
    k = min(spec.m, spec.n)
    if len(spec.region) != 4 * k:
        raise ConfigError(
            f"region needs 4*min(m,n)={4 * k} numbers: "
            "alpha_lo..., alpha_hi..., alpha_hat_lo..., alpha_hat_hi..."
        )
    vals = list(spec.region)
    try:
        region = ExponentRegion(
            tuple(vals[0:k]),
            tuple(vals[k : 2 * k]),
            tuple(vals[2 * k : 3 * k]),
            tuple(vals[3 * k : 4 * k]),
        )
        region.event_class()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    snr_grid = [10 ** (db / 10) for db in spec.snr_db_list]
    rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed))
    try:
        slope, predicted, rows = empirical_event_exponent(
            spec.m, spec.n, snr_grid, region, spec.trials, rng, n_train=spec.n_train
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    region_id = "region[" + ";".join(_fmt(v) for v in spec.region) + "]"
    lines = ["snr_db,region,trials,hits,p_hat,ci_low,ci_high,predicted_exponent"]
    for db, (snr, hits, trials, lo, hi) in zip(spec.snr_db_list, rows):
        lines.append(
            ",".join(
                [
                    _fmt(float(db)),
                    region_id,
                    str(trials),
                    str(hits),
                    _fmt(hits / trials),
                    _fmt(lo),
                    _fmt(hi),
                    _fmt(predicted),
                ]
            )
        )
    lines.append(
        ",".join(
            [
                "summary",
                region_id,
                str(sum(r[2] for r in rows)),
                str(sum(r[1] for r in rows)),
                _fmt(slope),
                "",
                "",
                _fmt(predicted),
            ]
        )
    )
    _write_csv(spec.output, lines)
    return 0


def cmd_calibrate(spec: RunSpec) -> int:
    """Print the calibrated power ladder and feedback policy per SNR point."""
    scenario = _scenario_from_name(spec.scenario)
    lines = ["snr_db,level,p_linear,p_exponent,q_linear,q_exponent,threshold,flag"]
    code = 0
    for db in spec.snr_db_list:
        snr = 10 ** (db / 10)
        config = _mimo_config(spec, snr)
        try:
            policies = calibrate_power_levels(
                scenario, config, spec.pilot_trials, seed=spec.seed
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if policies.flag:
            code = 3
        fb = policies.feedback
        for level in range(policies.power.k_levels):
            q_lin = fb.levels[level] if fb else ""
            q_exp = fb.exponents[level] if fb else ""
            thr = fb.thresholds[level] if fb and level < len(fb.thresholds) else ""
            lines.append(
                ",".join(
                    [
                        _fmt(float(db)),
                        str(level),
                        _fmt(policies.power.levels[level]),
                        _fmt(policies.power.exponents[level]),
                        _fmt(q_lin) if q_lin != "" else "",
                        _fmt(q_exp) if q_exp != "" else "",
                        _fmt(thr) if thr != "" else "",
                        policies.flag,
                    ]
                )
            )
    _write_csv(spec.output, lines)
    return code


_COMMANDS = {
    "dmt": cmd_dmt,
    "sim": cmd_sim,
    "mac": cmd_mac,
    "exponents": cmd_exponents,
    "calibrate": cmd_calibrate,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmtlab",
        description="Diversity-multiplexing tradeoff lab: analytic curves and "
        "link-level Monte Carlo for feedback protocols.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("dmt", "emit analytic tradeoff curves as CSV"),
        ("sim", "Monte Carlo outage sweep for one scenario"),
        ("mac", "multiple-access union-outage sweep"),
        ("exponents", "joint eigenvalue-exponent region verification"),
        ("calibrate", "print calibrated power levels and thresholds"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("-o", "--output", help="output CSV path ('-' for stdout)")
        p.add_argument("--m", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--l-users", type=int, dest="l_users")
        p.add_argument("--r", type=float)
        p.add_argument("--k-levels", type=int, dest="k_levels")
        p.add_argument("--epsilon", type=float)
        p.add_argument("--n-train", type=int, dest="n_train")
        p.add_argument("--scenario")
        p.add_argument("--snr-db", dest="snr_db_list",
                       help="comma-separated SNR points in dB")
        p.add_argument("--trials", type=int)
        p.add_argument("--trials-list", dest="trials_list",
                       help="comma-separated per-point trial counts")
        p.add_argument("--seed", type=int)
        p.add_argument("--parallelism", type=int)
        p.add_argument("--const-fb-c", type=float, dest="const_fb_c")
        p.add_argument("--pilot-trials", type=int, dest="pilot_trials")
        p.add_argument("--r-grid", dest="r_grid",
                       help="comma-separated multiplexing gains")
        p.add_argument("--region", help="comma-separated region bounds")
    return parser


def _spec_from_args(args: argparse.Namespace) -> RunSpec:
    spec = RunSpec(command=args.command)
    if args.config:
        spec = load_config(args.config, spec)
        spec = replace(spec, command=args.command)
    overrides = {}
    for key in ("m", "n", "l_users", "r", "k_levels", "epsilon", "n_train",
                "scenario", "trials", "seed", "parallelism", "const_fb_c",
                "pilot_trials", "output"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.snr_db_list is not None:
        overrides["snr_db_list"] = tuple(
            float(v) for v in args.snr_db_list.split(",") if v.strip()
        )
    if args.trials_list is not None:
        overrides["trials_list"] = tuple(
            int(v) for v in args.trials_list.split(",") if v.strip()
        )
    if args.r_grid is not None:
        overrides["r_grid"] = tuple(float(v) for v in args.r_grid.split(",") if v.strip())
    if args.region is not None:
        overrides["region"] = tuple(float(v) for v in args.region.split(",") if v.strip())
    return replace(spec, **overrides)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        spec = _spec_from_args(args)
        return _COMMANDS[args.command](spec)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
