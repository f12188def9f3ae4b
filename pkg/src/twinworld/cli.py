"""Experiment runner command line.

Usage: ``twinworld CONFIG [--seed N] [--samples N] [--mode M] [--out DIR]
[--no-figures]``.  The configuration is a flat key=value text file (``#``
starts a comment); command-line flags override file values.  Exit codes:
0 success, 2 configuration error, 3 degenerate-state abort.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, DegenerateStateError, TwinWorldError
from .experiments import RUNNERS, run_experiment
from .reporting import render_figures, write_metadata, write_table

_INT_KEYS = {"n_samples", "seed", "N", "D", "M", "N_t", "phi_points",
             "barrier_lo", "barrier_hi"}
_FLOAT_KEYS = {"t_max", "x0", "k", "sigma_x", "barrier_height", "phi_min",
               "phi_max"}
_STR_KEYS = {"experiment", "mode", "out_dir"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS

_COMMON = {"mode": "distribution", "n_samples": 10000, "seed": 1,
           "out_dir": "out"}

DEFAULTS = {
    "phase_rotation": {
        **_COMMON, "mode": "ensemble", "n_samples": 100000,
        "phi_min": -3.141592653589793, "phi_max": 3.141592653589793,
        "phi_points": 41,
    },
    "chsh": {
        **_COMMON, "mode": "ensemble", "n_samples": 10000,
        "phi_min": -3.141592653589793, "phi_max": 3.141592653589793,
        "phi_points": 41,
    },
    "free_particle": {
        **_COMMON, "N": 5, "N_t": 501, "t_max": 1.0, "x0": 2.0,
        "k": 0.0, "sigma_x": 0.0,
    },
    "tunneling": {
        **_COMMON, "N": 120, "N_t": 16001, "t_max": 40.0, "x0": 40.0,
        "k": 10.0, "sigma_x": 4.0, "barrier_lo": 59, "barrier_hi": 61,
        "barrier_height": 1.0,
    },
    "locality": {**_COMMON, "n_samples": 150},
}


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _coerce(key: str, value):
    if isinstance(value, str):
        try:
            if key in _INT_KEYS:
                return int(value)
            if key in _FLOAT_KEYS:
                return float(value)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: {exc}") from None
    return value


def load_config(path: str | Path, overrides: dict | None = None) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    raw = parse_config_text(text)
    if "experiment" not in raw:
        raise ConfigError("config must set 'experiment'")
    experiment = raw["experiment"]
    if experiment not in RUNNERS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from "
            f"{sorted(RUNNERS)}"
        )
    cfg = dict(DEFAULTS[experiment])
    cfg["experiment"] = experiment
    for key, value in raw.items():
        cfg[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    if cfg["mode"] not in ("distribution", "ensemble"):
        raise ConfigError(f"mode must be distribution|ensemble, got {cfg['mode']!r}")
    if cfg["experiment"] in ("free_particle", "tunneling") and cfg["mode"] == "ensemble":
        raise ConfigError(
            "lattice experiments run in distribution mode; the finite-"
            "ensemble propagator is available only through the library API"
        )
    if cfg["n_samples"] < 1:
        raise ConfigError("n_samples must be positive")
    if cfg.get("phi_points", 1) < 1:
        raise ConfigError("phi_points must be positive")
    if cfg.get("N_t", 2) < 2:
        raise ConfigError("N_t must be at least 2")
    if cfg.get("t_max", 1.0) <= 0:
        raise ConfigError("t_max must be positive")
    if cfg.get("N", 3) < 3:
        raise ConfigError("N must be at least 3")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="twinworld",
        description="Run a twin-world emulation experiment from a config file.",
    )
    parser.add_argument("config", help="path to a key=value config file")
    parser.add_argument("--seed", type=int, help="override the RNG seed")
    parser.add_argument("--samples", type=int, dest="n_samples",
                        help="override the sample count (optimizer restarts "
                             "for the locality study)")
    parser.add_argument("--mode", choices=("distribution", "ensemble"),
                        help="override the evaluation mode")
    parser.add_argument("--out", dest="out_dir", help="override the output directory")
    parser.add_argument("--no-figures", action="store_true",
                        help="write CSVs only, skip PNG rendering")
    args = parser.parse_args(argv)

    overrides = {
        "seed": args.seed,
        "n_samples": args.n_samples,
        "mode": args.mode,
        "out_dir": args.out_dir,
    }
    try:
        cfg = load_config(args.config, overrides)
        result = run_experiment(cfg)
        out_dir = Path(cfg["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        for table in result.tables:
            path = write_table(table, out_dir)
            print(f"{cfg['experiment']}: wrote {path} ({len(table.rows)} rows)")
        if not args.no_figures:
            for path in render_figures(result, out_dir):
                print(f"{cfg['experiment']}: wrote {path}")
        from . import __version__

        meta = write_metadata(result, cfg, out_dir, __version__)
        print(f"{cfg['experiment']}: wrote {meta}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DegenerateStateError as exc:
        print(f"degenerate state: {exc}", file=sys.stderr)
        return 3
    except TwinWorldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
