"""Command-line interface: run, dump-truth, report."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .agents import ConfigError
from .config import ARCH_CHOICES, from_dict, load_config
from .domain import CompositionGrid
from .groundtruth import ChallengeSpec, grid_truth_table
from .runner import RunFailure, report, run_sweep

EXIT_CONFIG = 2
EXIT_RUNTIME = 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multitask", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a campaign sweep and write its outputs")
    run_p.add_argument("--config", type=Path, help="TOML config file (defaults apply when omitted)")
    run_p.add_argument("--arch", choices=ARCH_CHOICES, help="override the configured architecture")
    run_p.add_argument("--seed", type=int, help="override the configured base seed")
    run_p.add_argument("--out", type=Path, help="override the configured output directory")

    truth_p = sub.add_parser("dump-truth", help="emit x,true_property,true_phase over the grid")
    truth_p.add_argument("--challenge", type=int, required=True, help="challenge id (1 or 2)")
    truth_p.add_argument("--out", type=Path, help="output CSV path (stdout when omitted)")

    report_p = sub.add_parser("report", help="aggregate completed architecture directories")
    report_p.add_argument("dirs", nargs="+", type=Path, help="architecture run directories")
    report_p.add_argument("--out", type=Path, default=Path("report"), help="report output directory")
    return parser


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config) if args.config else from_dict({})
        overrides = {}
        if args.arch:
            overrides["architecture"] = args.arch
        if args.seed is not None:
            overrides["base_seed"] = args.seed
        if args.out is not None:
            overrides["output_dir"] = str(args.out)
        if overrides:
            config = config.with_overrides(**overrides)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifests = run_sweep(config)
    except RunFailure as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for manifest in manifests:
        print(f"{manifest['architecture']}: {len(manifest['runs'])} runs -> {config.output_dir}")
    return 0


def _cmd_dump_truth(args) -> int:
    try:
        spec = ChallengeSpec.for_challenge(args.challenge)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = grid_truth_table(CompositionGrid.default(), spec)
    target = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(["x", "true_property", "true_phase"])
        for x, prop, phase in rows:
            writer.writerow([repr(x), repr(prop), phase])
    finally:
        if args.out:
            target.close()
    return 0


def _cmd_report(args) -> int:
    try:
        out = report(args.dirs, args.out)
    except (ValueError, FileNotFoundError) as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"report written to {out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "dump-truth":
        return _cmd_dump_truth(args)
    return _cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
