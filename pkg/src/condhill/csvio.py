"""Reading ``x,y`` input files and writing result tables."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import InvariantViolation, ParseError
from .series import PairedSeries

__all__ = ["read_xy", "ingest_csv", "fmt", "write_table"]


def fmt(v) -> str:
    """17 significant digits: lossless for binary64.  Strings pass through."""
    if v is None:
        return "nan"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def read_xy(path, require_positive: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Parse columns ``x`` and ``y`` from a comma-separated file.

    Lines starting with ``#`` and blank lines are skipped; the first
    remaining line is the header and extra columns are ignored.  Line
    numbers in errors count physical lines from 1.
    """
    text = Path(path).read_bytes().decode("utf-8-sig")
    header = None
    xs, ys = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if header is None:
            names = [f.lower() for f in fields]
            if "x" not in names or "y" not in names:
                raise ParseError(lineno, None, "header must name columns 'x' and 'y'")
            header = (names.index("x"), names.index("y"), len(names))
            continue
        ix, iy, width = header
        if len(fields) < width:
            raise ParseError(lineno, None, f"expected {width} fields, found {len(fields)}")
        vals = []
        for col, idx in (("x", ix), ("y", iy)):
            try:
                v = float(fields[idx])
            except ValueError:
                raise ParseError(lineno, col, f"cannot parse {fields[idx]!r} as a number") from None
            if not math.isfinite(v):
                raise ParseError(lineno, col, "non-finite value")
            vals.append(v)
        if require_positive and vals[1] <= 0:
            raise InvariantViolation(f"non-positive response y={vals[1]!r}", line=lineno)
        xs.append(vals[0])
        ys.append(vals[1])
    if header is None:
        raise ParseError(1, None, "missing header")
    if not xs:
        raise ParseError(1, None, "no data rows")
    return np.array(xs), np.array(ys)


def ingest_csv(path) -> PairedSeries:
    """Load a :class:`PairedSeries` from an ``x,y`` CSV file."""
    x, y = read_xy(path, require_positive=True)
    return PairedSeries(x, y)


def write_table(path, header: str, rows, comments=()) -> Path:
    """Write ``# comment`` lines, a header and comma-joined rows with LF endings."""
    path = Path(path)
    lines = [f"# {c}" for c in comments]
    lines.append(header)
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path
