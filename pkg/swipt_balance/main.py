"""
Command-line entry point: ``swipt-balance <region|sweep|converge|ser> --config FILE``.
"""

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from swipt_balance.errors import SwiptError
from swipt_balance.experiments.config import load_experiment_config
from swipt_balance.experiments.runner import run_command

logger = logging.getLogger(__name__)

COMMANDS = {
    "region": "rate-energy region over a splitting-ratio grid",
    "sweep": "trial-averaged metrics over an SNR, z, rho or bits grid",
    "converge": "per-iteration objective of the iterative balanced design",
    "ser": "QPSK symbol error rate against SNR",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swipt-balance",
        description="Chordal-distance balanced precoding for SWIPT in MIMO interference channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="INI experiment file")
        cmd.add_argument("--out", help="output directory (overrides output_dir)")
        cmd.add_argument("--seed", type=int, help="master seed")
        cmd.add_argument("--trials", type=int, help="channel realizations per grid point")
        cmd.add_argument("--threads", type=int, help="worker threads over trials")
        cmd.add_argument("--plot", choices=["html", "png"], help="also render a plot from the CSV")
        cmd.add_argument(
            "--log-level",
            default="INFO",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            help="logging level (default: INFO)",
        )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for swipt-balance 📡"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level))

    overrides = {
        "output_dir": args.out,
        "seed": args.seed,
        "trials": args.trials,
        "threads": args.threads,
        "plot": args.plot,
    }
    try:
        experiment = load_experiment_config(args.config, overrides)
        print(f"📡 swipt-balance {args.command}: {experiment.name} ({experiment.trials} trials, seed {experiment.seed})")
        paths = run_command(args.command, experiment)
    except (SwiptError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    for path in paths:
        print(f"📄 {path}")
    print("✅ Done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
