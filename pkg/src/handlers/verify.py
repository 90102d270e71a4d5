"""`verify DOMAIN`: exact checks over the algebra, BFV, toy and formal modules."""

import argparse
import logging

from src.handlers.common import add_common_arguments, load_for, run_and_report
from src.services.checks import checks_for

logger = logging.getLogger(__name__)

DOMAINS = ("algebra", "bfv", "toy", "formal")


def register(subparsers):
    parser = subparsers.add_parser("verify", help="exact symbolic verification")
    parser.add_argument("domain", choices=DOMAINS)
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)


async def handle(args: argparse.Namespace) -> int:
    check_ids = checks_for(args.domain, args.check)
    model = await load_for(args, args.domain)
    logger.info(f"verify {args.domain}: {len(check_ids)} checks on {model.name}")
    return await run_and_report(model, check_ids, args, f"verify {args.domain}")
