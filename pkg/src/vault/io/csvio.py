"""CSV reading/writing for point data.

Parsing is locale-independent: the decimal separator is always '.', values
go through ``float()`` regardless of system locale. Values are written
with 9 significant digits, which round-trips float32 exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vault.errors import FormatError, ValidationError


@dataclass
class CsvOptions:
    delimiter: str = ","
    has_header: bool = True

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise ValidationError(f"delimiter must be one character, got {self.delimiter!r}")
        if self.delimiter == ".":
            raise ValidationError("delimiter may not equal the decimal separator '.'")


def load_csv_values(path, opts: CsvOptions | None = None):
    """Parse a CSV file into (float32 matrix, dim names)."""
    opts = opts or CsvOptions()
    path = Path(path)
    rows: list[list[float]] = []
    names: list[str] | None = None
    width: int | None = None
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle, delimiter=opts.delimiter)
        for line_no, cells in enumerate(reader, start=1):
            if not cells:
                continue  # blank line
            if names is None and opts.has_header:
                names = [c.strip() for c in cells]
                width = len(names)
                continue
            if width is None:
                width = len(cells)
            if len(cells) != width:
                raise FormatError(
                    f"{path.name}: line {line_no}: expected {width} columns, got {len(cells)}")
            row = []
            for col, cell in enumerate(cells):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise FormatError(
                        f"{path.name}: line {line_no}, column {col + 1}: "
                        f"not a number: {cell.strip()!r}") from None
            rows.append(row)
    if not rows:
        raise FormatError(f"{path.name}: no data rows")
    values = np.asarray(rows, dtype=np.float32)
    if names is None:
        names = [f"dim{i}" for i in range(values.shape[1])]
    return values, names


def write_csv_values(path, values, dim_names, opts: CsvOptions | None = None) -> None:
    opts = opts or CsvOptions()
    values = np.asarray(values, dtype=np.float32)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter=opts.delimiter)
        if opts.has_header:
            writer.writerow(dim_names)
        for row in values:
            writer.writerow([f"{v:.9g}" for v in row])
