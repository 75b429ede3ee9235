"""Resident feature tables: CSV ingestion and export."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import PrevoptError, RangeError, SchemaError
from .pfs import FeatureSchema


class RowError(SchemaError):
    """A malformed cell; ``line`` is the 1-based line number in the CSV file."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class IngestionReport:
    rows: int
    missing_rate: dict  # feature name -> fraction of empty cells

    @property
    def overall_missing_rate(self) -> float:
        if not self.missing_rate:
            return 0.0
        return sum(self.missing_rate.values()) / len(self.missing_rate)


def _parse(cell: str, kind: str):
    cell = cell.strip()
    if cell == "":
        return None
    if kind == "binary":
        if cell not in ("0", "1"):
            raise ValueError(f"binary cell must be 0 or 1, got {cell!r}")
        return int(cell)
    v = float(cell)
    if not (0.0 <= v <= 1.0):
        raise RangeError(f"value {v} outside [0, 1]")
    return v


def ingest_residents(csv_path, schema) -> tuple[np.ndarray, IngestionReport]:
    """Read a resident CSV into an ``(n, D, 2)`` PFN array.

    ``schema`` is a :class:`FeatureSchema` or a path to its JSON sidecar.
    Columns may appear in any order but must match the schema names exactly.
    """
    if not isinstance(schema, FeatureSchema):
        schema = FeatureSchema.load(schema)
    names = schema.names
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError("empty resident file") from None
        unknown = [h for h in header if h not in names]
        if unknown:
            raise SchemaError(f"unknown columns {unknown}")
        missing = [n for n in names if n not in header]
        if missing:
            raise SchemaError(f"columns missing from CSV: {missing}")
        if len(set(header)) != len(header):
            raise SchemaError("duplicate columns in CSV header")
        col = [header.index(n) for n in names]
        kinds = [d.kind for d in schema.descriptors]
        vectors, empty = [], np.zeros(len(names), dtype=np.int64)
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise RowError(line_no, f"expected {len(header)} cells, got {len(row)}")
            values = []
            for d, (c, kind) in enumerate(zip(col, kinds)):
                try:
                    v = _parse(row[c], kind)
                except (ValueError, PrevoptError) as exc:
                    raise RowError(line_no, f"column {names[d]!r}: {exc}") from None
                if v is None:
                    empty[d] += 1
                values.append(v)
            vectors.append(schema.encode_row(values))
    n = len(vectors)
    if n == 0:
        raise SchemaError("resident file has no data rows")
    report = IngestionReport(n, {name: float(empty[d]) / n for d, name in enumerate(names)})
    return np.stack(vectors), report


def write_residents(path, schema: FeatureSchema, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(schema.names)
        for row in rows:
            w.writerow(["" if v is None else v for v in row])
