"""Command line front end.

Exit codes: 0 all checks passed, 1 a check failed, 2 configuration error,
3 runtime error.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import List, Optional

from .config import EXPERIMENTS, ConfigError, build_config, load_config_file
from .experiments import RUNNERS
from .fd import DimensionError
from .reports import RunReport

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biharmonic-conformal",
        description="Numerical checks for biharmonic conformal changes of metric.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config merged over the experiment defaults")
    common.add_argument("--out", metavar="DIR", help="write <experiment>.json (and CSV) into DIR")
    common.add_argument("--csv", action="store_true", help="also write plot-ready CSV tables (needs --out)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized presets")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, parents=[common])
        if name == "ansatz":
            p.add_argument("--n", type=int, default=None, help="dimension")
            p.add_argument("--family", choices=["ex1", "ex2"], default=None)
    sub.add_parser("all", parents=[common], help="run every experiment with its defaults")
    return parser


def _overrides(args, experiment: str) -> dict:
    doc = load_config_file(args.config) if args.config else {}
    if args.seed is not None:
        doc["seed"] = args.seed
    if experiment == "ansatz":
        ansatz = dict(doc.get("ansatz", {}))
        if getattr(args, "n", None) is not None:
            ansatz["n"] = args.n
        if getattr(args, "family", None) is not None:
            ansatz["family"] = args.family
        if ansatz:
            doc["ansatz"] = ansatz
    return doc


def _emit(report: RunReport, args) -> None:
    for line in report.lines():
        print(line)
    if args.out:
        for path in report.write(args.out, csv=args.csv):
            print(f"wrote {path}")
    elif args.csv:
        print("note: --csv needs --out; no CSV written", file=sys.stderr)


def run_one(experiment: str, args, overrides: Optional[dict] = None) -> int:
    start = time.perf_counter()
    try:
        cfg = build_config(experiment, overrides if overrides is not None else _overrides(args, experiment))
        report = RUNNERS[experiment](cfg)
    except (ConfigError, DimensionError) as err:
        print(f"config error ({experiment}): {err}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as err:  # noqa: BLE001 - any failure inside a run is a runtime error
        print(f"runtime error ({experiment}): {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    _emit(report, args)
    print(f"{experiment}: wall time {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return report.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command != "all":
        return run_one(args.command, args)
    if args.config:
        print("config error (all): --config is not accepted with 'all'", file=sys.stderr)
        return EXIT_CONFIG
    codes = [run_one(name, args, {} if args.seed is None else {"seed": args.seed}) for name in EXPERIMENTS]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
