"""Command-line entry point.

Subcommands
-----------
build-weight    assemble and certify the elliptic weight for one scenario
run-wave        wave evolution with energy recording and certification
run-heat        parabolic semigroup decay scan
run-diffusion   wave vs heat comparison (diffusion phenomenon)
verify          full verification suite (bundled scenarios + built-in checks)
fit             decay-exponent fit of a CSV time series column

Exit codes: 0 pass, 1 check failure, 2 config error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

from .analysis import fit_decay_exponent
from .config import load_config
from .errors import ConfigError, NumericsError
from .runner import run_scenario, verify_suite

EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ABORT = 3


def bundled_scenarios() -> list[Path]:
    root = resources.files("dampedwave") / "scenarios"
    return sorted(Path(str(root)).glob("*.toml"))


def _add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", action="append", default=None,
                   help="scenario TOML (repeatable for 'verify')",
                   required=config_required)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--dump-fields", action="store_true",
                   help="also write field snapshots / the weight table")
    p.add_argument("--threads", type=int, default=1,
                   help="worker hint; execution stays deterministic")


def _scenario_command(args, enable: dict) -> int:
    cfg = load_config(args.config[0])
    for key, value in enable.items():
        setattr(cfg.analysis, key, value)
    result = run_scenario(cfg, Path(args.out) / cfg.name, dump_fields=args.dump_fields)
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}")
    return EXIT_PASS if result.passed else EXIT_CHECK_FAILURE


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dampedwave", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-weight", help="assemble + certify the weight")
    _add_common(p)
    p = sub.add_parser("run-wave", help="wave run with certification")
    _add_common(p)
    p = sub.add_parser("run-heat", help="semigroup decay scan")
    _add_common(p)
    p = sub.add_parser("run-diffusion", help="diffusion phenomenon comparison")
    _add_common(p)

    p = sub.add_parser("verify", help="full verification suite")
    _add_common(p, config_required=False)
    p.add_argument("--no-builtin", action="store_true",
                   help="skip the built-in (scenario-free) checks")

    p = sub.add_parser("fit", help="fit a decay exponent to a CSV series")
    p.add_argument("csv_path")
    p.add_argument("--column", default=None, help="value column (default: second)")
    p.add_argument("--t-lo", type=float, default=10.0)
    p.add_argument("--t-hi", type=float, required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "build-weight":
            return _scenario_command(args, dict(
                run_wave=False, run_identities=False, run_inequalities=False,
                run_semigroup=False, run_diffusion=False))
        if args.command == "run-wave":
            return _scenario_command(args, dict(run_semigroup=False, run_diffusion=False))
        if args.command == "run-heat":
            return _scenario_command(args, dict(
                run_wave=False, run_identities=False, run_inequalities=False,
                run_semigroup=True, run_diffusion=False))
        if args.command == "run-diffusion":
            return _scenario_command(args, dict(run_diffusion=True))
        if args.command == "verify":
            paths = args.config if args.config else bundled_scenarios()
            summary = verify_suite(paths, args.out, include_builtin=not args.no_builtin)
            print(f"verify: {'PASS' if summary.passed else 'FAIL'}")
            return summary.exit_code
        if args.command == "fit":
            return _fit_command(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except NumericsError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_ABORT
    return EXIT_PASS


def _fit_command(args) -> int:
    with open(args.csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ConfigError("empty CSV")
    col = args.column or [c for c in rows[0] if c != "t"][0]
    if col not in rows[0]:
        raise ConfigError(f"column {col!r} not in {sorted(rows[0])}")
    times = [float(r["t"]) for r in rows]
    values = [float(r[col]) for r in rows]
    try:
        fit = fit_decay_exponent(times, values, (args.t_lo, args.t_hi))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(json.dumps({
        "column": col,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "window": list(fit.window),
        "n_points": fit.n_points,
    }, sort_keys=True, indent=2))
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
