"""Lagged regression design for VAR estimation.

An n x p series with lag order d becomes m = n - d stacked regressions:
row t of the design holds (x_{t-1}', ..., x_{t-d}') for t = d+1..n, and
the response for variable j is (x_{d+1;j}, ..., x_{n;j}).

Columns are lag-major: column (s-1)*p + r (1-based) is variable r at lag
s. `ColumnIndex` carries that bookkeeping, including the position map
needed when a column is removed for a nodewise regression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeError
from .varmodel import TimeSeries


@dataclass(frozen=True)
class ColumnIndex:
    """Address of one design column: variable r (1..p) at lag s (1..d)."""

    r: int
    s: int
    p: int

    def __post_init__(self):
        if not (1 <= self.r <= self.p):
            raise IndexError(f"variable index r = {self.r} outside 1..{self.p}")
        if self.s < 1:
            raise IndexError(f"lag index s = {self.s} must be >= 1")

    @property
    def flat(self) -> int:
        """1-based flat position: (s-1)*p + r."""
        return (self.s - 1) * self.p + self.r

    @property
    def flat0(self) -> int:
        return self.flat - 1

    def dropped_position(self, other: "ColumnIndex") -> int:
        """0-based position of `other` in the design with this column
        removed. Columns after the removed one shift left by one."""
        if other.flat0 == self.flat0:
            raise IndexError("column was removed from the design")
        return other.flat0 if other.flat0 < self.flat0 else other.flat0 - 1


@dataclass(eq=False)
class LaggedDesign:
    """Stacked lag matrix plus all p response vectors.

    x is m x (p*d); responses is m x p (column j - 1 is variable j's
    response). Arrays are read-only views of freshly copied data."""

    x: np.ndarray
    responses: np.ndarray
    n: int
    d: int

    def __post_init__(self):
        self.x.setflags(write=False)
        self.responses.setflags(write=False)

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.responses.shape[1]

    @property
    def q(self) -> int:
        return self.x.shape[1]

    def response(self, j: int) -> np.ndarray:
        """Response vector for variable j (1-based)."""
        if not (1 <= j <= self.p):
            raise IndexError(f"variable index j = {j} outside 1..{self.p}")
        return self.responses[:, j - 1]

    def column(self, idx: ColumnIndex) -> np.ndarray:
        return self.x[:, idx.flat0]

    def index(self, r: int, s: int) -> ColumnIndex:
        idx = ColumnIndex(r=r, s=s, p=self.p)
        if idx.s > self.d:
            raise IndexError(f"lag index s = {s} outside 1..{self.d}")
        return idx

    def all_indices(self) -> list[ColumnIndex]:
        return [ColumnIndex(r=r, s=s, p=self.p)
                for s in range(1, self.d + 1) for r in range(1, self.p + 1)]


def build(ts: TimeSeries | np.ndarray, d: int) -> LaggedDesign:
    """Assemble the lagged design from a series.

    Requires n > d + 2 so that at least a couple of degrees of freedom
    remain; raises SizeError otherwise.
    """
    if isinstance(ts, TimeSeries):
        data = ts.values
    else:
        data = TimeSeries(np.asarray(ts, dtype=float)).values
    n, p = data.shape
    if d < 1:
        raise SizeError(f"lag order must be >= 1, got {d}")
    if n <= d + 2:
        raise SizeError(
            f"series of length {n} is too short for lag order {d}; need n > d + 2"
        )
    m = n - d
    # Fortran order: the lasso solver walks columns, and keeping the
    # design in column-major layout makes every downstream fit zero-copy.
    x = np.empty((m, p * d), order="F")
    for s in range(1, d + 1):
        x[:, (s - 1) * p:s * p] = data[d - s:n - s, :]
    responses = data[d:n, :].copy()
    return LaggedDesign(x=x, responses=responses, n=n, d=d)


def drop_column(design: LaggedDesign, idx: ColumnIndex) -> tuple[np.ndarray, np.ndarray]:
    """Split the design into (everything but idx, the idx column itself).

    Columns keep their relative order; `idx.dropped_position` maps an
    original column to its position in the reduced matrix.
    """
    if idx.flat0 >= design.q:
        raise IndexError(f"column {idx.flat} outside 1..{design.q}")
    k = idx.flat0
    reduced = np.empty((design.m, design.q - 1), order="F")
    reduced[:, :k] = design.x[:, :k]
    reduced[:, k:] = design.x[:, k + 1:]
    removed = design.x[:, k].copy()
    return reduced, removed
