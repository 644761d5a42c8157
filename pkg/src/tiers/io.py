"""Plain CSV reading and writing for designs, responses and reports."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

__all__ = ["CsvFormatError", "ingest_csv", "dump_csv"]


class CsvFormatError(ValueError):
    """Malformed CSV content; ``line`` and ``column`` are 1-based."""

    def __init__(self, path, line, column, message):
        loc = f"{path}:{line}" + (f":{column}" if column else "")
        super().__init__(f"{loc}: {message}")
        self.path = str(path)
        self.line = line
        self.column = column


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def ingest_csv(path, layout="matrix"):
    """Read a numeric CSV file.

    The first row is treated as a header when any of its cells is not a
    number.  ``layout="vector"`` requires a single column and returns a 1-d
    array.

    Raises
    ------
    CsvFormatError
        On empty files, ragged rows, and missing, non-numeric or non-finite
        cells; the message carries the line and column.
    """
    if layout not in ("matrix", "vector"):
        raise ValueError(f"layout must be 'matrix' or 'vector', got {layout!r}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r]
    if rows and not all(_is_number(c.strip()) for c in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise CsvFormatError(path, 1, None, "no data rows")
    width = len(rows[0][1])
    out = np.empty((len(rows), width))
    for r, (line, cells) in enumerate(rows):
        if len(cells) != width:
            raise CsvFormatError(path, line, None,
                                 f"expected {width} cells, found {len(cells)}")
        for c, cell in enumerate(cells):
            text = cell.strip()
            if not text:
                raise CsvFormatError(path, line, c + 1, "missing value")
            try:
                val = float(text)
            except ValueError:
                raise CsvFormatError(path, line, c + 1,
                                     f"not a number: {text!r}") from None
            if not math.isfinite(val):
                raise CsvFormatError(path, line, c + 1, f"non-finite value {text!r}")
            out[r, c] = val
    if layout == "vector":
        if width != 1:
            raise CsvFormatError(path, rows[0][0], None,
                                 f"expected a single column, found {width}")
        return out[:, 0]
    return out


def dump_csv(path, array, header=None):
    """Write a 1-d or 2-d array with shortest round-trip float formatting."""
    a = np.asarray(array, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"expected a 1-d or 2-d array, got {a.ndim} dims")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in a:
            w.writerow([repr(float(v)) for v in row])
