"""CSV loading against the simulator's documented column schemas.

The plotting side consumes only the stable CSV interfaces (summary.csv,
slots.csv, state.csv, bcd_trace.csv); nothing here imports the simulator.
"""

from __future__ import annotations

import csv
import os

import numpy as np


class SchemaError(ValueError):
    """A required column or input file is missing."""


def read_csv(path: str) -> dict[str, np.ndarray]:
    """Columns as float arrays where possible, string arrays otherwise."""
    if not os.path.exists(path):
        raise SchemaError(f"missing input file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"empty CSV: {path}")
    header, data = rows[0], rows[1:]
    out: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        col = [r[j] if j < len(r) else "" for r in data]
        try:
            out[name] = np.array([float(v) if v else np.nan for v in col])
        except ValueError:
            out[name] = np.array(col, dtype=object)
    return out


def require(table: dict, columns, path: str) -> None:
    for c in columns:
        if c not in table:
            raise SchemaError(f"{path}: missing required column {c!r}")


def find_run_dirs(root: str) -> list[str]:
    """Run directories under root (or root itself) holding state.csv."""
    if os.path.exists(os.path.join(root, "state.csv")):
        return [root]
    out = []
    for name in sorted(os.listdir(root)):
        d = os.path.join(root, name)
        if os.path.isdir(d) and os.path.exists(os.path.join(d, "state.csv")):
            out.append(d)
    return out
