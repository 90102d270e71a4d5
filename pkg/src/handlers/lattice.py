"""`lattice`: numerical convergence checks and the finite-difference oracle."""

import argparse
import logging

from src.handlers.common import add_common_arguments, load_for, run_and_report
from src.services.checks import checks_for
from src.utils.reliability import ConfigurationError

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("lattice", help="lattice convergence checks")
    parser.add_argument("check_id", nargs="?", help="check to run (same as --check)")
    add_common_arguments(parser, lattice_flags=True)
    parser.set_defaults(handler=handle)


async def handle(args: argparse.Namespace) -> int:
    if args.check_id is not None:
        if args.check is not None and args.check != args.check_id:
            raise ConfigurationError(f"conflicting checks {args.check_id!r} and --check {args.check!r}")
        args.check = args.check_id
    model = await load_for(args, "lattice")
    section = model.schema.lattice
    if args.check is None and section is not None and section.checks:
        check_ids = [c for c in section.checks if c in checks_for("lattice")] or checks_for("lattice")
    else:
        check_ids = checks_for("lattice", args.check)
    logger.info(f"lattice: {', '.join(check_ids)} on {model.name}")
    return await run_and_report(model, check_ids, args, "lattice")
