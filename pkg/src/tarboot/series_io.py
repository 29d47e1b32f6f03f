"""Reading a single series from a CSV file.

Format: comma separated, ``.`` as decimal point, optional header row, lines
starting with ``#`` and blank lines ignored.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import TimeSeries
from .exceptions import SeriesFileError


@dataclass(frozen=True)
class SeriesFile:
    path: str
    column: Union[str, int, None] = None
    transform: str = "none"

    def load(self) -> TimeSeries:
        return read_series(self.path, self.column, self.transform == "sqrt")


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _rows(path):
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise SeriesFileError(f"cannot read {path}: {exc.strerror or exc}") from None
    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        out.append((lineno, next(csv.reader([line]))))
    return out


def read_series(path, column: Union[str, int, None] = None, sqrt: bool = False) -> TimeSeries:
    """Read one column of ``path`` as a :class:`TimeSeries`.

    ``column`` is a header name or a 0-based index (default: the first
    column). Non-finite or unparsable cells raise :class:`SeriesFileError`
    naming the line and column.
    """
    rows = _rows(path)
    if not rows:
        raise SeriesFileError(f"{path}: no data rows")
    header: Optional[list] = None
    first = [c.strip() for c in rows[0][1]]
    if not all(_is_number(c) for c in first):
        header = first
        rows = rows[1:]
    if isinstance(column, str) and column.strip().lstrip("-").isdigit():
        column = int(column)
    if column is None:
        idx = 0
    elif isinstance(column, int):
        idx = column
    else:
        if header is None or column not in header:
            raise SeriesFileError(f"{path}: no column named {column!r}")
        idx = header.index(column)
    name = header[idx] if header is not None and 0 <= idx < len(header) else f"column {idx}"
    values = []
    for lineno, cells in rows:
        if idx >= len(cells) or idx < -len(cells):
            raise SeriesFileError(f"{path}: line {lineno} has no {name}")
        cell = cells[idx].strip()
        try:
            v = float(cell)
        except ValueError:
            raise SeriesFileError(f"{path}: line {lineno}, {name}: cannot parse {cell!r}") from None
        if not np.isfinite(v):
            raise SeriesFileError(f"{path}: line {lineno}, {name}: non-finite value {cell!r}")
        if sqrt and v < 0:
            raise SeriesFileError(
                f"{path}: line {lineno}, {name}: negative value {cell!r} with sqrt transform"
            )
        values.append(v)
    if not values:
        raise SeriesFileError(f"{path}: no data rows")
    arr = np.asarray(values)
    if sqrt:
        arr = np.sqrt(arr)
    return TimeSeries(arr, label=name)
