"""CSV readers with named-column validation.

The figure builders consume the simulation harness's documented CSV
schemas and never recompute statistics; a missing column fails with an
error naming it.
"""

from __future__ import annotations

import csv
import os

import numpy as np


class SchemaError(ValueError):
    """An input file does not match the expected column schema."""


def read_csv(path, required=(), numeric=True) -> dict:
    """Load a CSV into {column: array}, validating required column names."""
    if not os.path.exists(path):
        raise SchemaError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(
            f"{os.path.basename(path)}: missing column(s) "
            + ", ".join(repr(c) for c in missing)
        )
    cols = {}
    for j, name in enumerate(header):
        values = [row[j] for row in rows if len(row) > j]
        if numeric:
            try:
                cols[name] = np.array([float(v) for v in values])
            except ValueError:
                cols[name] = np.array(values)
        else:
            cols[name] = np.array(values)
    return cols
