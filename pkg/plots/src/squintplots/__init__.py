"""Presentation layer over the simulator's CSV outputs.

Nothing in here recomputes physics: every figure is a direct rendering of
one CSV file, with axis labels taken from its column names.
"""

from .inputs import InputError, Schema, SCHEMAS, PATTERN_SCHEMA, load_inputs

__all__ = [
    "InputError",
    "Schema",
    "SCHEMAS",
    "PATTERN_SCHEMA",
    "load_inputs",
]
