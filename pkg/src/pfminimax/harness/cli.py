"""Command-line entry point: ``python3 -m pfminimax {generate,run,rate,sweep}``."""

from __future__ import annotations

import argparse
import sys

from .commands import (
    cmd_generate,
    cmd_rate,
    cmd_run,
    cmd_sweep,
    exit_code_for,
)
from .config import ExperimentConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pfminimax",
        description="Projection-free minimax solvers: runs, rate checks and sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "write synthetic dictionary-learning matrices (MMX1 files)",
        "run": "run one solver configuration and write trace.csv/summary.json",
        "rate": "fit an empirical convergence exponent and check it against a band",
        "sweep": "run a grid of configurations in parallel workers",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="flat key = value config file")
        p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                       dest="overrides", help="override a config key (repeatable)")
        p.add_argument("--seed", type=int, help="seed for synthetic data")
        p.add_argument("--out", metavar="DIR", required=True, help="output directory")
        if name == "sweep":
            p.add_argument("--workers", type=int,
                           help="parallel workers (default: $MMX_WORKERS or min(4, CPUs))")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_sources(args.config, args.overrides, args.seed)
        if args.command == "generate":
            return cmd_generate(cfg, args.out)
        if args.command == "run":
            return cmd_run(cfg, args.out)
        if args.command == "rate":
            return cmd_rate(cfg, args.out)
        return cmd_sweep(cfg, args.out, args.workers)
    except Exception as err:
        print(f"error: {err}", file=sys.stderr)
        return exit_code_for(err)


if __name__ == "__main__":
    sys.exit(main())
