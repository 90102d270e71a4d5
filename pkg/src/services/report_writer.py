"""
Report files for one CLI run: summary.json, transcript.txt, one CSV per
convergence table and one JSON file per rewrite trace.

Nothing time-dependent goes into summary.json unless REPORT_TIMINGS is
set, so a rerun at the same seed writes the same bytes.
"""

import csv
import io
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import aiofiles

from src.config import config
from src.services.checks import CheckRecord
from src.utils.reliability import ReportWriteError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["check", "N", "defect_norm", "est_order"]


@dataclass
class ReportContext:
    model: str
    model_hash: str
    seed: int
    conventions: List[str] = field(default_factory=list)
    verb: str = ""


def ordered(records: List[CheckRecord]) -> List[CheckRecord]:
    """Failures first, then by check id."""
    return sorted(records, key=lambda r: (r.passed, r.check_id))


def build_summary(records: List[CheckRecord], context: ReportContext, timings: Optional[bool] = None) -> dict:
    timings = config.REPORT_TIMINGS if timings is None else timings
    passed = sum(1 for r in records if r.passed)
    return {
        "model": context.model,
        "model_hash": context.model_hash,
        "seed": context.seed,
        "conventions": list(context.conventions),
        "checks": [r.as_dict(timings) for r in ordered(records)],
        "summary": {"total": len(records), "passed": passed, "failed": len(records) - passed},
    }


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_transcript(records: List[CheckRecord], context: ReportContext) -> str:
    lines = [
        f"model: {context.model}",
        f"sha256: {context.model_hash}",
        f"seed: {context.seed}",
        "",
        "conventions:",
        *(f"  - {c}" for c in context.conventions),
        "",
    ]
    for record in ordered(records):
        timing = f"{record.runtime_ms:.0f} ms" if record.runtime_ms is not None else "n/a"
        order = f"{record.est_order:.2f}" if record.est_order is not None else "-"
        lines.append(f"[{record.status.upper()}] {record.check_id} ({record.verb})")
        lines.append(f"  residual: {record.max_residual}")
        lines.append(f"  est. order: {order}   wall time: {timing}")
        lines.extend(f"  * {note}" for note in record.notes)
        if record.trace:
            lines.append(f"  trace: {len(record.trace)} steps in {record.check_id}.trace.json")
        lines.append("")
    passed = sum(1 for r in records if r.passed)
    lines.append(f"{passed}/{len(records)} checks passed")
    return "\n".join(lines) + "\n"


def render_csv(record: CheckRecord) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in record.rows:
        order = "" if row.est_order is None else repr(float(row.est_order))
        writer.writerow([row.check, row.N, repr(float(row.defect_norm)), order])
    return buffer.getvalue()


async def _write(path: str, text: str):
    try:
        async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
            await f.write(text)
    except OSError as e:
        raise ReportWriteError(path, e.strerror or str(e))


async def emit_report(records: List[CheckRecord], context: ReportContext, out_dir: str = None) -> Dict[str, object]:
    """Write all report files under ``out_dir`` and return the summary dict."""
    out_dir = out_dir or config.OUTPUT_DIR
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise ReportWriteError(out_dir, e.strerror or str(e))

    summary = build_summary(records, context)
    await _write(os.path.join(out_dir, "summary.json"), summary_json(summary))
    await _write(os.path.join(out_dir, "transcript.txt"), render_transcript(records, context))

    for record in records:
        if record.rows:
            await _write(os.path.join(out_dir, f"{record.check_id}.csv"), render_csv(record))
        if record.trace:
            trace = json.dumps(record.trace, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
            await _write(os.path.join(out_dir, f"{record.check_id}.trace.json"), trace)

    logger.info(f"Report for {context.model} written to {out_dir} "
                f"({summary['summary']['passed']}/{summary['summary']['total']} passed)")
    return summary
