"""Uniform time and space grids.

Every sampled object in the lab lives on a uniform grid: paths on a
``TimeGrid`` (t0 + k*dt, k = 0..n-1) and local-time fields additionally on an
``XGrid`` of uniform level bins.  Both are plain records; all alignment
bookkeeping (locating a time row, locating the bin of a level) lives here so
the statistics modules never re-derive index arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridRangeError

__all__ = ["TimeGrid", "XGrid"]

# Relative slack used when snapping a real time/level to a grid index.
_ALIGN_RTOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid t0 + k*dt for k = 0..n-1."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if not (self.dt > 0.0) or not np.isfinite(self.dt):
            raise DomainError(f"dt must be positive and finite, got {self.dt}")
        if self.n < 2:
            raise DomainError(f"need at least two grid points, got n={self.n}")
        if self.t0 < 0.0:
            raise DomainError(f"t0 must be nonnegative, got {self.t0}")

    @property
    def t_max(self) -> float:
        return self.t0 + (self.n - 1) * self.dt

    @property
    def horizon(self) -> float:
        """Length of the covered interval, (n-1)*dt."""
        return (self.n - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def index_of(self, t: float) -> int:
        """Index k with t0 + k*dt == t, within rounding slack.

        Raises GridRangeError when t is off the grid or not aligned.
        """
        k = (t - self.t0) / self.dt
        ki = int(round(k))
        if ki < 0 or ki >= self.n:
            raise GridRangeError(f"time {t} outside grid [{self.t0}, {self.t_max}]")
        if abs(k - ki) > _ALIGN_RTOL * max(1.0, abs(k)) + 1e-9:
            raise GridRangeError(f"time {t} is not aligned to the grid (dt={self.dt})")
        return ki


@dataclass(frozen=True)
class XGrid:
    """Uniform level bins [x_min + j*dx, x_min + (j+1)*dx) for j = 0..m-1."""

    x_min: float
    dx: float
    m: int

    def __post_init__(self):
        if not (self.dx > 0.0) or not np.isfinite(self.dx):
            raise DomainError(f"dx must be positive and finite, got {self.dx}")
        if self.m < 1:
            raise DomainError(f"need at least one bin, got m={self.m}")

    @property
    def x_max(self) -> float:
        return self.x_min + self.m * self.dx

    def edges(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.m + 1)

    def centers(self) -> np.ndarray:
        return self.x_min + self.dx * (np.arange(self.m) + 0.5)

    def bin_of(self, x: float) -> int:
        """Bin index containing level x; the last edge belongs to the last bin."""
        if x < self.x_min or x > self.x_max:
            raise GridRangeError(f"level {x} outside bins [{self.x_min}, {self.x_max}]")
        j = int(np.floor((x - self.x_min) / self.dx))
        return min(max(j, 0), self.m - 1)

    def covers(self, lo: float, hi: float) -> bool:
        return self.x_min <= lo and hi <= self.x_max
