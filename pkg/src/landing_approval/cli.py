"""Command-line entry point: ``landing-approval <command> --config ... --seed ... --out ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from landing_approval.config import load_config
from landing_approval.errors import ConfigError, LandingApprovalError
from landing_approval.experiments import COMMANDS, ExperimentSpec, cmd_validate

OUTPUT_ENV = "LANDING_APPROVAL_OUT"
DEFAULT_SEED = 20240601

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="landing-approval",
        description="Sequential Bayesian deployment approval for landing controllers.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, default=None, help="JSON config (defaults built in)")
    parser.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="base seed (u64)")
    parser.add_argument(
        "--out",
        type=Path,
        default=None,
        help=f"output directory (default: ${OUTPUT_ENV} or ./results)",
    )
    parser.add_argument("--parallel", type=int, default=1, help="rollout worker processes")
    parser.add_argument(
        "--trajectories", type=int, default=0, help="validate: dump the first K rollout trajectories as CSV"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    out = args.out or Path(os.environ.get(OUTPUT_ENV, "results"))
    try:
        if args.parallel < 1:
            raise ConfigError("--parallel must be >= 1")
        config = load_config(args.config)
        spec = ExperimentSpec(args.command, config, args.seed, out, args.parallel)
        if args.command == "validate":
            cmd_validate(spec, trajectories=args.trajectories)
        else:
            COMMANDS[args.command](spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LandingApprovalError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
