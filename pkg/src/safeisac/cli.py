"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 every trial infeasible,
3 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError
from .harness import METHODS, VARIABLES, SweepSpec, emit_plots, read_csv, run_sweep, write_csv
from .scenario import ScenarioConfig, load_config

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3


def _values(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(int(part))
        except ValueError:
            try:
                out.append(float(part))
            except ValueError:
                raise ConfigError(f"cannot parse sweep value {part!r}") from None
    return tuple(out)


def _methods(text):
    return tuple(m.strip() for m in text.split(",") if m.strip())


def build_parser():
    ap = argparse.ArgumentParser(prog="safeisac", description="STAR-RIS anti-jamming and target-concealment sweeps")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo sweep and write results.csv")
    run.add_argument("--config", help="key = value scenario file (defaults if omitted)")
    run.add_argument("--sweep", required=True, choices=VARIABLES)
    run.add_argument("--values", required=True, help="comma-separated, ascending")
    run.add_argument("--trials", type=int, default=100)
    run.add_argument("--methods", default=",".join(METHODS))
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=0, help="64-bit seed base")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--timing", action="store_true", help="fill wall_time_ms (makes the CSV nondeterministic)")
    run.add_argument("--plots", action="store_true", help="also write plots next to the CSV")

    sub.add_parser("selftest", help="run the built-in oracle and property checks")

    plot = sub.add_parser("plot", help="plot a results CSV")
    plot.add_argument("--csv", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--sweep", default="", choices=("",) + VARIABLES, help="axis label for the x values")
    return ap


def _run(args):
    base = load_config(args.config) if args.config else ScenarioConfig()
    spec = SweepSpec(
        variable=args.sweep,
        values=_values(args.values),
        n_trials=args.trials,
        methods=_methods(args.methods),
        base=base,
        seed_base=args.seed,
        timing=args.timing,
    )
    out = Path(args.out)
    result = run_sweep(spec, jobs=args.jobs)
    write_csv(result, out / "results.csv")
    if args.plots:
        emit_plots(result, out)
    print(f"wrote {len(result.rows)} rows to {out / 'results.csv'}")
    if not any(r["feasible_flag"] for r in result.rows):
        print("every trial was infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "selftest":
            from .selftest import run_selftest

            return EXIT_OK if run_selftest() else 1
        if args.command == "plot":
            paths = emit_plots(read_csv(args.csv, args.sweep), args.out)
            for p in paths:
                print(p)
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # malformed CSV input to `plot`
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
