"""Command line entry point: ``endpointcert run|analyze|presets``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .channels import PRESETS
from .config import ConfigError, load_scenario, load_sweep
from .runner import run_analysis, run_scenario


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_run(args) -> int:
    config = load_scenario(args.scenario)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.trials is not None:
        config = replace(config, trials=args.trials)
    config.validate()
    report = run_scenario(config, workers=args.workers)
    as_csv = args.format == "csv" or (args.format is None and args.out is not None and args.out.suffix == ".csv")
    _write(report.to_csv() if as_csv else report.to_json(), args.out)
    return 0


def cmd_analyze(args) -> int:
    sweep = load_sweep(args.sweep)
    if args.seed is not None:
        sweep.seed = args.seed
    if args.trials is not None:
        sweep.montecarlo_trials = args.trials
    _write(run_analysis(sweep), args.out)
    return 0


def cmd_presets(args) -> int:
    lines = ["name\tW\te\tspoofable\teavesdroppable\tcost\tsuggested"]
    for name, p in PRESETS.items():
        lines.append(
            f"{name}\t{float(p.per_message_time):g}\t{float(p.delivery_delay):g}\t"
            f"{p.spoofable}\t{p.eavesdroppable}\t{float(p.cost_per_message):g}\t{','.join(p.suggested)}"
        )
    _write("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="endpointcert",
        description="Simulate and analyse on-chain certification of endpoint bindings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--trials", type=int, help="override the number of trials")
    common.add_argument("--out", "-o", type=Path, help="write output here instead of stdout")

    run = sub.add_parser("run", parents=[common], help="run a scenario file")
    run.add_argument("scenario", type=Path)
    run.add_argument("--format", choices=("json", "csv"), help="report format (default json, or csv for *.csv)")
    run.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    run.set_defaults(func=cmd_run)

    analyze = sub.add_parser("analyze", parents=[common], help="evaluate an analysis sweep file to CSV")
    analyze.add_argument("sweep", type=Path)
    analyze.set_defaults(func=cmd_analyze)

    presets = sub.add_parser("presets", help="list channel presets")
    presets.add_argument("--out", "-o", type=Path)
    presets.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
