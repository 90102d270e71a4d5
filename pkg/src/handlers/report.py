"""`report`: every check a model file declares, in one report."""

import argparse
import logging

from src.handlers.common import add_common_arguments, run_and_report
from src.services.checks import VERB_OF, declared_checks
from src.services.model_file import load_model
from src.utils.reliability import ConfigurationError, UnknownCheckError

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("report", help="run the checks declared by a model file")
    add_common_arguments(parser, lattice_flags=True)
    parser.set_defaults(handler=handle)


async def handle(args: argparse.Namespace) -> int:
    if not args.model:
        raise ConfigurationError("report needs --model")
    model = await load_model(args.model)
    check_ids = declared_checks(model)
    if args.check is not None:
        if args.check not in VERB_OF:
            raise UnknownCheckError(args.check)
        check_ids = [args.check]
    logger.info(f"report: {len(check_ids)} declared checks on {model.name}")
    return await run_and_report(model, check_ids, args, "report")
