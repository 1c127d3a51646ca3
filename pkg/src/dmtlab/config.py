"""Flat key=value run configuration shared by the CLI and scripts.

One `key = value` pair per line, `#` starts a comment; lists are
comma-separated.  CLI flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields


class ConfigError(ValueError):
    """Raised for unusable run configurations; maps to CLI exit code 2."""


@dataclass
class RunSpec:
    """Everything one command invocation needs."""

    command: str = ""
    m: int = 1
    n: int = 1
    l_users: int = 2
    r: float = 0.2
    k_levels: int = 2
    epsilon: float = 0.05
    n_train: int = 10
    scenario: str = "no-feedback"
    snr_db_list: tuple[float, ...] = (10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 100_000
    trials_list: tuple[int, ...] = ()
    seed: int = 0
    parallelism: int = 1
    const_fb_c: float = 1.0
    pilot_trials: int = 100_000
    r_grid: tuple[float, ...] = ()
    region: tuple[float, ...] = ()
    output: str = "-"

    def trials_for_points(self, count: int) -> list[int]:
        if self.trials_list:
            if len(self.trials_list) != count:
                raise ConfigError(
                    f"trials_list has {len(self.trials_list)} entries for {count} SNR points"
                )
            return list(self.trials_list)
        return [self.trials] * count


_INT_KEYS = {"m", "n", "l_users", "k_levels", "n_train", "trials", "seed",
             "parallelism", "pilot_trials"}
_FLOAT_KEYS = {"r", "epsilon", "const_fb_c"}
_FLOAT_LIST_KEYS = {"snr_db_list", "r_grid", "region"}
_INT_LIST_KEYS = {"trials_list"}
_STR_KEYS = {"scenario", "output", "command"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _FLOAT_LIST_KEYS | _INT_LIST_KEYS | _STR_KEYS


def parse_config_text(text: str, spec: RunSpec | None = None) -> RunSpec:
    """Parse `key = value` lines into a RunSpec, starting from `spec`."""
    spec = spec or RunSpec()
    values = {f.name: getattr(spec, f.name) for f in fields(spec)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return RunSpec(**values)


def _convert(key: str, value: str):
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _FLOAT_LIST_KEYS:
        return tuple(float(v) for v in value.split(",") if v.strip())
    if key in _INT_LIST_KEYS:
        return tuple(int(v) for v in value.split(",") if v.strip())
    return value


def load_config(path: str, spec: RunSpec | None = None) -> RunSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, spec)
