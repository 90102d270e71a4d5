import argparse
import asyncio
import logging
import sys
from typing import List, Optional

import betterlogging as bl

from src.config import config
from src.handlers import lattice, report, verify
from src.utils.reliability import VerificationError


def setup_logging(level: Optional[str] = None):
    # basicConfig logs to stderr, stdout is left to --json
    bl.basic_colorized_config(level=getattr(logging, (level or config.LOG_LEVEL).upper(), logging.INFO))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.main",
        description="Graded constraint verification workbench",
    )
    parser.add_argument("--log-level", default=None, help=f"logging level (default {config.LOG_LEVEL})")
    subparsers = parser.add_subparsers(dest="verb", required=True)
    verify.register(subparsers)
    lattice.register(subparsers)
    report.register(subparsers)
    return parser


async def run(args: argparse.Namespace) -> int:
    """Run one parsed verb. Returns the process exit status."""
    logger = logging.getLogger(__name__)
    try:
        return await args.handler(args)
    except VerificationError as e:
        logger.error(e.message)
        print(f"error: {e.message}\nhint: {e.hint}", file=sys.stderr)
        return e.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return asyncio.run(run(args))
    except KeyboardInterrupt:
        logging.getLogger(__name__).info("Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
