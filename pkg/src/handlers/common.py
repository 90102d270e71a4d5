"""Helpers shared by the verb handlers: model resolution, flags, run + report."""

import argparse
import logging
from pathlib import Path
from typing import List, Optional

from src.config import config
from src.services.checks import RunOptions, conventions_for
from src.services.model_file import ModelFile, load_model
from src.services.report_writer import ReportContext, emit_report, summary_json
from src.services.task_queue import run_checks
from src.utils.reliability import ConfigurationError

logger = logging.getLogger(__name__)

MODELS_DIR = Path(__file__).resolve().parents[2] / "models"

# fixture used when --model is not given
DEFAULT_MODELS = {
    "algebra": "so3.model",
    "bfv": "so3.model",
    "toy": "nonconstant-f.model",
    "formal": "gr-formal.model",
    "lattice": "lattice-default.model",
}


def add_common_arguments(parser: argparse.ArgumentParser, lattice_flags: bool = False):
    parser.add_argument("--model", help="model file (TOML); defaults to the bundled fixture")
    parser.add_argument("--check", help="run only this check id")
    parser.add_argument("--seed", type=int, help=f"random seed (default {config.SEED})")
    parser.add_argument("--out", default=None, help=f"report directory (default {config.OUTPUT_DIR})")
    parser.add_argument("--json", action="store_true", help="print the JSON summary on stdout")
    parser.add_argument("--workers", type=int, default=None, help="parallel check workers")
    if lattice_flags:
        parser.add_argument("--n", dest="sizes", help="comma separated lattice sizes, e.g. 8,16,32")
        parser.add_argument("--fd-step", dest="fd_step", type=float, help="finite-difference step")
        parser.add_argument("--k", type=int, help="number of odd parameters")


def parse_sizes(text: Optional[str]) -> Optional[tuple]:
    if text is None:
        return None
    try:
        return tuple(int(n) for n in text.split(",") if n.strip())
    except ValueError:
        raise ConfigurationError(f"--n expects comma separated integers, got {text!r}")


def options_from(args: argparse.Namespace) -> RunOptions:
    fd_step = getattr(args, "fd_step", None)
    if fd_step is not None and fd_step <= 0:
        raise ConfigurationError(f"--fd-step must be positive, got {fd_step}")
    return RunOptions(
        sizes=parse_sizes(getattr(args, "sizes", None)),
        seed=args.seed,
        fd_step=fd_step,
        k=getattr(args, "k", None),
    )


def resolve_model_path(path: Optional[str], domain: str) -> str:
    if path:
        return path
    default = MODELS_DIR / DEFAULT_MODELS[domain]
    logger.debug(f"No --model given, using {default}")
    return str(default)


async def load_for(args: argparse.Namespace, domain: str) -> ModelFile:
    return await load_model(resolve_model_path(args.model, domain))


def print_outcome(summary: dict, as_json: bool):
    if as_json:
        print(summary_json(summary), end="")
        return
    for check in summary["checks"]:
        order = "" if check["est_order"] is None else f"  order {check['est_order']:.2f}"
        print(f"{check['status'].upper():4}  {check['check_id']:<26} residual {check['max_residual']}{order}")
    totals = summary["summary"]
    print(f"{totals['passed']}/{totals['total']} passed")


async def run_and_report(model: ModelFile, check_ids: List[str], args: argparse.Namespace, verb: str) -> int:
    """Run the checks, write the report, return the exit status (0 all pass, 1 otherwise)."""
    options = options_from(args)
    records = await run_checks(model, check_ids, options, args.workers)
    context = ReportContext(model.name, model.hash, options.seed_for(model), conventions_for(check_ids), verb)
    summary = await emit_report(records, context, args.out)
    print_outcome(summary, args.json)
    return 0 if summary["summary"]["failed"] == 0 else 1
