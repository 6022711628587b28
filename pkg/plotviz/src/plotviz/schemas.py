"""Published CSV schemas of the experiment tool, and typed readers.

This package deliberately shares no code with the producer: the fixed column
sets below are the contract.  A file whose header deviates fails loudly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

__all__ = ["SchemaError", "read_table", "SCHEMAS", "sibling_metadata"]

SCHEMAS = {
    "bound_grid": (
        ("lambda", float), ("sigma", float), ("ville", float),
        ("freedman", float), ("cond1", bool), ("cond2", bool), ("gap", float),
    ),
    "issf_compare": (
        ("K", int), ("epsilon", float), ("distribution", str),
        ("bound_raw", float), ("bound", float), ("bound_vacuous", bool),
        ("issf_indicator", int), ("p_hat", float), ("ci_lo", float),
        ("ci_hi", float), ("n_trials", int), ("n_exits", int),
    ),
    "hlip_case": (
        ("d_max", float), ("alpha", float), ("K", int), ("h0", float),
        ("delta", float), ("sigma_sq", float), ("bound_raw", float),
        ("bound", float), ("bound_vacuous", bool), ("p_hat", float),
        ("ci_lo", float), ("ci_hi", float), ("n_trials", int),
        ("n_exits", int), ("n_controller_failures", int),
        ("first_violation_step", int),
    ),
    "hlip_trajectories": (
        ("d_max", float), ("alpha", float), ("trial", int), ("step", int),
        ("px", float), ("py", float),
    ),
}


class SchemaError(ValueError):
    """Input file does not match the published schema."""


def _parse(value: str, typ):
    if typ is bool:
        if value == "true":
            return True
        if value == "false":
            return False
        raise SchemaError(f"expected true/false, got {value!r}")
    return typ(value)


def read_table(path, kind: str) -> list[dict]:
    """Read one CSV against the schema for ``kind``; returns row dicts."""
    if kind not in SCHEMAS:
        raise SchemaError(f"unknown table kind {kind!r}")
    schema = SCHEMAS[kind]
    expected = tuple(name for name, _ in schema)
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader, ()))
            if header != expected:
                raise SchemaError(
                    f"{path}: header {header} does not match the "
                    f"{kind} schema {expected}"
                )
            rows = []
            for raw in reader:
                if not raw:
                    continue
                if len(raw) != len(schema):
                    raise SchemaError(f"{path}: row width {len(raw)} != {len(schema)}")
                rows.append(
                    {name: _parse(v, typ) for v, (name, typ) in zip(raw, schema)}
                )
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    return rows


def sibling_metadata(csv_path) -> dict:
    """Metadata from the equivalent .json emitted next to a CSV, if any."""
    json_path = Path(csv_path).with_suffix(".json")
    if not json_path.exists():
        return {}
    try:
        doc = json.loads(json_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return {}
    md = doc.get("metadata", {})
    return md if isinstance(md, dict) else {}
