# persistence/reports.py
import csv
import logging
from pathlib import Path
from typing import Dict, List, Sequence

from restoration_engine import __version__
from restoration_engine.evaluation import EvaluationReport

log = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "policy", "mean_total", "gap_mean_pct", "gap_ci_lo", "gap_ci_hi", "R", "seed",
    "tool_version",
]
GRID_COLUMNS = ["instance", "n", "p", "s"]


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def report_rows(report: EvaluationReport, prefix: Sequence[str] = ()) -> List[List[str]]:
    """One row per policy, in evaluation order."""
    return [
        [
            *prefix,
            entry.name,
            _fmt(entry.mean_total),
            _fmt(entry.gap_mean_pct),
            _fmt(entry.gap_ci_lo),
            _fmt(entry.gap_ci_hi),
            str(report.realizations),
            str(report.seed),
            __version__,
        ]
        for entry in report.summaries
    ]


def write_rows(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    log.info(f"Wrote {len(rows)} report rows to {path}")
    return path


def write_report(report: EvaluationReport, path: Path) -> Path:
    return write_rows(path, REPORT_COLUMNS, report_rows(report))


def read_report(path: Path) -> List[Dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))
