"""Batch renderer for safety-bound experiment CSVs."""

from .render import FigureSpec, REGION_LABELS, build_figure, render
from .schemas import SCHEMAS, SchemaError, read_table

__version__ = "0.1.0"
