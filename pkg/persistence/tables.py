# persistence/tables.py
import logging
from pathlib import Path

from pydantic import ValidationError

from restoration_engine import __version__
from restoration_engine.errors import TableFormatError
from restoration_engine.learner import ValueTable
from restoration_engine.models import KeyTrace, TableEntry, ValueTableDocument

log = logging.getLogger(__name__)

TABLE_FORMAT = "trnrp-value-table"
TABLE_VERSION = 1


def table_to_document(table: ValueTable) -> ValueTableDocument:
    entries = [
        TableEntry(key=list(key), value=table.values[key], visits=table.visits[key])
        for key in sorted(table.values)
    ]
    traces = [
        KeyTrace(key=list(key), points=list(points))
        for key, points in sorted(table.traces.items())
    ]
    return ValueTableDocument(
        tool_version=__version__,
        mode=table.mode,
        pruning=table.pruning,
        nodes=table.nodes,
        seed=table.seed,
        iterations=table.iterations,
        config=table.config,
        batch_deltas=list(table.batch_deltas),
        entries=entries,
        traces=traces,
    )


def table_from_document(document: ValueTableDocument) -> ValueTable:
    table = ValueTable(
        document.mode,
        document.pruning,
        document.config,
        nodes=document.nodes,
        seed=document.seed,
    )
    table.iterations = document.iterations
    table.batch_deltas = list(document.batch_deltas)
    for entry in document.entries:
        key = tuple(entry.key)
        table.values[key] = entry.value
        table.visits[key] = entry.visits
    for trace in document.traces:
        table.traces[tuple(trace.key)] = [tuple(point) for point in trace.points]
    return table


def save_table(table: ValueTable, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table_to_document(table).model_dump_json(indent=2) + "\n")
    log.info(f"Wrote {table.label()} table ({len(table)} keys) to {path}")
    return path


def load_table(path: Path) -> ValueTable:
    """Raises TableFormatError for corrupt files or an unknown format/version."""
    path = Path(path)
    try:
        document = ValueTableDocument.model_validate_json(path.read_text())
    except ValidationError as e:
        raise TableFormatError(f"Corrupt value table {path}: {e}") from e
    if document.format != TABLE_FORMAT or document.version != TABLE_VERSION:
        raise TableFormatError(
            f"Unsupported table {path}: {document.format} v{document.version}"
        )
    return table_from_document(document)
