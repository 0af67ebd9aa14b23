"""Delimited output with locale-independent, reproducible formatting.

Headers carry units as name[unit] with [-] for dimensionless columns.
Formatting is purely positional (period decimal separator, LF endings,
no timestamps), so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np


def format_value(value, precision: int = 6) -> str:
    """Render one cell: strings pass through, integers stay exact, floats
    use general format at the requested precision, None becomes nan."""
    if value is None:
        return "nan"
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.{precision}g}"


def write_csv(path, header, rows, precision: int = 6) -> Path:
    """Write a CSV file and return its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value, precision) for value in row])
    return path


def format_table(names, values, precision: int = 6) -> str:
    """Two-column text table used for terminal summaries."""
    width = max(len(name) for name in names)
    lines = [
        f"  {name:<{width}}  {format_value(value, precision)}"
        for name, value in zip(names, values)
    ]
    return "\n".join(lines)
