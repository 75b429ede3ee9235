"""Versioned CSV tables used for traces and run reports."""

from __future__ import annotations

import csv

from .errors import FormatVersionError

FORMAT_VERSION = 1
_PREFIX = "# format_version:"


def write_table(path, fields, rows) -> None:
    """Write ``rows`` under a ``# format_version`` line and a header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"{_PREFIX} {FORMAT_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def read_table(path) -> tuple[list[str], list[dict]]:
    """Inverse of :func:`write_table`; values come back as strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith(_PREFIX):
            raise FormatVersionError(f"{path}: missing format_version line")
        version = first[len(_PREFIX):].strip()
        if version != str(FORMAT_VERSION):
            raise FormatVersionError(f"{path}: unsupported format_version {version!r}")
        reader = csv.DictReader(fh)
        return list(reader.fieldnames or []), list(reader)
