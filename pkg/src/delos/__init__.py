"""Exact symbolic toolkit for linear PDE systems over differential fields."""

__version__ = "0.1.0"

from .field import DiffFieldDescriptor, FieldElement, UNDEFINED, field_arith, derive, check_table

__all__ = [
    "DiffFieldDescriptor", "FieldElement", "UNDEFINED",
    "field_arith", "derive", "check_table",
]
