"""CSV loading and the price-to-returns cleaning pipeline."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import Empty, Io, Malformed, NonPositivePrice, ZeroVariance
from .model import Dataset

log = logging.getLogger(__name__)

CLIP_SD = 3.0


@dataclass(frozen=True)
class RawTable:
    columns: tuple[str, ...]
    values: NDArray[np.float64]
    dropped: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != len(self.columns):
            raise Malformed(f"values of shape {v.shape} do not match {len(self.columns)} columns")
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def positive(self) -> bool:
        """True when every cell is strictly positive (usable as prices)."""
        return bool(np.all(self.values > 0))


def _parse(cell: str) -> float | None:
    cell = cell.strip()
    if not cell:
        return None
    try:
        x = float(cell)
    except ValueError:
        return None
    return x if math.isfinite(x) else None


def load_csv(path: str | Path, has_header: bool = True) -> RawTable:
    """Read a comma-separated numeric table.

    Rows with an empty, non-numeric or non-finite cell are dropped and
    counted in ``RawTable.dropped``; blank lines are ignored. A row with the
    wrong number of cells makes the file Malformed.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise Io(f"cannot read {path}: {exc}") from exc
    except (UnicodeDecodeError, csv.Error) as exc:
        raise Malformed(f"{path}: {exc}") from exc
    if has_header:
        if not rows:
            raise Empty(f"{path} has no header")
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    elif rows:
        header = [f"x{j}" for j in range(len(rows[0]))]
    else:
        raise Empty(f"{path} is empty")
    width = len(header)
    kept, dropped = [], 0
    for lineno, row in enumerate(rows, start=2 if has_header else 1):
        if len(row) != width:
            raise Malformed(f"{path}:{lineno}: expected {width} cells, got {len(row)}")
        vals = [_parse(c) for c in row]
        if any(v is None for v in vals):
            dropped += 1
            continue
        kept.append(vals)
    if not kept:
        raise Empty(f"{path} has no complete data rows")
    if dropped:
        log.info("%s: dropped %d incomplete row(s)", path, dropped)
    return RawTable(tuple(header), np.array(kept, dtype=np.float64), dropped)


def log_returns(prices: NDArray) -> NDArray:
    """log(x_t / x_{t-1}) per column."""
    prices = np.asarray(prices, dtype=np.float64)
    if np.any(prices <= 0):
        raise NonPositivePrice("prices must be strictly positive")
    return np.diff(np.log(prices), axis=0)


def standardize(R: NDArray, columns=None) -> NDArray:
    """Full-sample mean 0 and sample sd 1 per column; ZeroVariance if a column is constant."""
    R = np.asarray(R, dtype=np.float64)
    mean = R.mean(axis=0)
    centred = R - mean
    sd = R.std(axis=0, ddof=1)
    scale = np.maximum(np.abs(mean), 1.0)
    flat = sd <= 1e-12 * scale
    if np.any(flat):
        names = [columns[j] if columns else str(j) for j in np.flatnonzero(flat)]
        raise ZeroVariance(f"zero-variance column(s): {', '.join(names)}")
    return centred / sd


def threshold(Z: NDArray, bound: float = CLIP_SD, *, drop_rows: bool = False) -> NDArray:
    """Clip to [-bound, bound], or with ``drop_rows`` remove every row with an outlier."""
    Z = np.asarray(Z, dtype=np.float64)
    if drop_rows:
        return Z[np.all(np.abs(Z) <= bound, axis=1)]
    return np.clip(Z, -bound, bound)


def clean_returns(table: RawTable, *, bound: float = CLIP_SD,
                  drop_rows: bool = False) -> Dataset:
    """Prices -> log returns -> standardized -> thresholded at ``bound`` sd.

    Statistics are computed once on the full sample; the clipped columns are
    not re-standardized.
    """
    if table.T < 3:
        raise Empty("need at least three prices per column")
    Z = standardize(log_returns(table.values), table.columns)
    Z = threshold(Z, bound, drop_rows=drop_rows)
    if Z.shape[0] < 2:
        raise Empty("fewer than two rows left after thresholding")
    return Dataset(Z)


def write_csv(path: str | Path, X: NDArray, columns=None) -> None:
    """Write rows of X in the dialect ``load_csv`` reads, at full float precision."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if columns is None:
        columns = [f"x{j}" for j in range(X.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows([[repr(float(v)) for v in row] for row in X])


def load_dataset(path: str | Path, has_header: bool = True, *, prices: bool = False) -> Dataset:
    """Load observations directly, or clean them first when the file holds prices."""
    table = load_csv(path, has_header)
    if prices:
        return clean_returns(table)
    if table.T < 2:
        raise Empty(f"{path} needs at least two observations")
    return Dataset(table.values)
