"""Atomic CSV and JSON artifact writers."""

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from polarity_lab.core.exceptions import OutputError

LOGGER = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"


@dataclass
class Table:
    """A CSV artifact: a header and its rows."""

    header: Sequence[str]
    rows: List[Sequence[Any]] = field(default_factory=list)


def format_value(value: Any) -> str:
    """Renders one CSV cell; floats carry 17 significant digits.

    >>> format_value(0.1)
    '0.10000000000000001'
    >>> format_value(None)
    ''
    """
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def render_csv(table: Table) -> str:
    """The CSV text of a table with LF line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([format_value(cell) for cell in row])
    return buffer.getvalue()


def atomic_write(path: Path, text: str) -> str:
    """Writes text next to its destination and renames it into place.

    Args:
        path (Path): The destination.
        text (str): The content.

    Returns:
        str: The sha256 hex digest of the written bytes.

    Raises:
        OutputError: If the file cannot be written.
    """
    data = text.encode("utf-8")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, temp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
            os.replace(temp, path)
        except BaseException:
            os.unlink(temp)
            raise
    except OSError as exc:
        raise OutputError(path, str(exc)) from exc
    return hashlib.sha256(data).hexdigest()


def emit_outputs(
    tables: Dict[str, Table],
    output_dir: Path,
    summary: Dict[str, Any],
) -> Dict[str, str]:
    """Writes CSV artifacts and a summary.json recording their digests.

    Files are written one after another, each atomically.

    Args:
        tables (Dict[str, Table]): CSV tables keyed by file name.
        output_dir (Path): The directory to write into; created if missing.
        summary (Dict[str, Any]): Run metadata merged into summary.json.

    Returns:
        Dict[str, str]: The sha256 digest of every file written, by name.
    """
    digests = {
        name: atomic_write(output_dir / name, render_csv(table))
        for name, table in sorted(tables.items())
    }
    document = {**summary, "digests": dict(digests)}
    digests[SUMMARY_FILE] = atomic_write(
        output_dir / SUMMARY_FILE,
        json.dumps(document, indent=2, sort_keys=True, default=str) + "\n",
    )
    LOGGER.info(f"Wrote {', '.join(digests)} to {output_dir}")
    return digests


def columns(prefix: str, count: int) -> Iterable[str]:
    """Numbered column names.

    >>> list(columns("a", 3))
    ['a0', 'a1', 'a2']
    """
    return (f"{prefix}{i}" for i in range(count))
