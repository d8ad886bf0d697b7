"""CSV/JSON output helpers.

All floating-point output uses 17 significant digits so re-runs with the
same seed produce byte-identical files.
"""

import json
import math


def f17(x) -> str:
    """Format a float at 17 significant digits (round-trip exact)."""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return format(float(x), ".17g")


def format_cell(x) -> str:
    if isinstance(x, (bool,)):
        return "1" if x else "0"
    if isinstance(x, (int,)):
        return str(x)
    if isinstance(x, float):
        return f17(x)
    return str(x)


def write_csv(path, header, rows) -> None:
    """Write rows (iterables of cells) under a comma-joined header."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(c) for c in row) + "\n")


def write_columns_csv(path, header, columns) -> None:
    """Column-major variant of :func:`write_csv`."""
    n = len(columns[0]) if columns else 0
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(format_cell(col[i]) for col in columns) + "\n")


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
