"""Typed result tables and their CSV/JSON serialization.

CSV output follows RFC 4180 (CRLF line endings, header row, UTF-8) with '.'
decimal separators and floats printed at 17 significant digits so values
round-trip exactly.  The JSON form is an equivalent array of records.  All
output is byte-deterministic for fixed inputs; wall-clock timestamps are
therefore excluded unless a caller explicitly supplies one.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

__all__ = ["ColumnSpec", "ResultTable", "write_manifest"]

TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str  # "str" | "int" | "float" | "bool"


def _format_value(value, kind: str) -> str:
    if kind == "float":
        v = float(value)
        if math.isnan(v) or math.isinf(v):
            raise ValueError(f"non-finite value {v!r} in result table")
        return format(v, ".17g")
    if kind == "int":
        return str(int(value))
    if kind == "bool":
        return "true" if value else "false"
    return str(value)


def _json_value(value, kind: str):
    if kind == "float":
        v = float(value)
        if math.isnan(v) or math.isinf(v):
            raise ValueError(f"non-finite value {v!r} in result table")
        return v
    if kind == "int":
        return int(value)
    if kind == "bool":
        return bool(value)
    return str(value)


@dataclass
class ResultTable:
    """Rows of typed columns plus run metadata.

    The column set is a fixed constant per scenario kind; appending validates
    each row against it so schema drift fails loudly.
    """

    columns: tuple[ColumnSpec, ...]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def append(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(
                f"row has {len(values)} values, table has {len(self.columns)} columns"
            )
        self.rows.append(tuple(values))

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> list:
        idx = self.column_names.index(name)
        return [row[idx] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(self.column_names)
        for row in self.rows:
            writer.writerow(
                [_format_value(v, c.kind) for v, c in zip(row, self.columns)]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        records = [
            {c.name: _json_value(v, c.kind) for v, c in zip(row, self.columns)}
            for row in self.rows
        ]
        doc = {"metadata": self.metadata, "records": records}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def write(self, directory, stem: str) -> list[str]:
        """Write <stem>.csv and <stem>.json into ``directory``; returns names."""
        names = []
        for suffix, text in ((".csv", self.to_csv()), (".json", self.to_json())):
            name = stem + suffix
            path = directory / name
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            names.append(name)
        return names


def standard_metadata(scenario_id: str, seed: int, timestamp: str | None = None, **extra) -> dict:
    md = {
        "tool_version": TOOL_VERSION,
        "scenario_id": scenario_id,
        "seed": int(seed),
        "timestamp": timestamp,
    }
    md.update(extra)
    return md


def write_manifest(directory, entries: list[dict], global_seed: int) -> str:
    """Run manifest: one record per emitted file plus seeds and version."""
    doc = {
        "tool_version": TOOL_VERSION,
        "seed": int(global_seed),
        "files": entries,
    }
    path = directory / "manifest.json"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return "manifest.json"
