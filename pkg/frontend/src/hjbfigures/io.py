"""CSV loading with file and line diagnostics.

All readers return columns as numpy arrays keyed by header name.  Every
failure mode (missing file, short row, non-numeric cell, absent column)
raises CsvError carrying the offending file and, where it exists, the
1-based line number, so the command line can print an actionable message.
"""

import csv
from pathlib import Path

import numpy as np


class CsvError(Exception):
    """A CSV artifact is missing, truncated, or malformed."""

    def __init__(self, message: str, path=None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = str(path)
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line


def read_table(path, required: tuple[str, ...] = ()) -> dict[str, np.ndarray]:
    """Read a comma-separated table into float columns.

    `required` names columns that must be present; extra columns are kept.
    """
    path = Path(path)
    if not path.is_file():
        raise CsvError("no such file", path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvError("empty file", path, 1) from None
        header = [name.strip() for name in header]
        for name in required:
            if name not in header:
                raise CsvError(f"missing column '{name}' (found {header})", path, 1)
        columns: list[list[float]] = [[] for _ in header]
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvError(
                    f"expected {len(header)} fields, got {len(row)}", path, line_no
                )
            for col, cell in zip(columns, row):
                try:
                    col.append(float(cell))
                except ValueError:
                    raise CsvError(f"non-numeric cell {cell!r}", path, line_no) from None
    if not columns[0]:
        raise CsvError("no data rows", path, 2)
    return {name: np.asarray(col) for name, col in zip(header, columns)}


def to_grid(table: dict[str, np.ndarray], value: str):
    """Reshape scattered (x, y, value) rows onto their tensor grid.

    Returns (xs, ys, V) with V[i, j] the value at (xs[i], ys[j]).  Rows may
    arrive in any order but must cover the full product grid.
    """
    xs = np.unique(table["x"])
    ys = np.unique(table["y"])
    if xs.size * ys.size != table["x"].size:
        raise CsvError(
            f"rows do not form a full {xs.size}x{ys.size} grid "
            f"({table['x'].size} rows)"
        )
    V = np.full((xs.size, ys.size), np.nan)
    ix = np.searchsorted(xs, table["x"])
    iy = np.searchsorted(ys, table["y"])
    V[ix, iy] = table[value]
    return xs, ys, V
