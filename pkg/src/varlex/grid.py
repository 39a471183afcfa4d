"""Box domains on uniform cell grids, midpoint quadrature and cell-centre sets.

Every sampled object in the package lives on a :class:`GridDomain`.  Samples
are stored flat in row-major (``ij``) order; ``domain.shape`` recovers the
tensor layout.  Functions are treated as identically zero outside the box.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

# Relative margin used for open-ball membership.  A point whose distance equals
# the radius up to rounding is treated as lying on the sphere, hence excluded.
BALL_EDGE_RTOL = 1e-12


def inside_open_ball(distance: np.ndarray, radius: float) -> np.ndarray:
    return distance < radius * (1.0 - BALL_EDGE_RTOL)


@dataclass(frozen=True)
class GridDomain:
    """Axis-aligned box ``[lower, upper]`` split into ``cells`` uniform cells per axis."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self) -> None:
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        cells = tuple(int(v) for v in np.atleast_1d(self.cells))
        if not (len(lower) == len(upper) == len(cells)):
            raise ValueError("lower, upper and cells must have the same length")
        if len(lower) not in (1, 2):
            raise ValueError(f"only 1-D and 2-D boxes are supported, got dim={len(lower)}")
        for axis, (a, b, m) in enumerate(zip(lower, upper, cells)):
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ValueError(f"axis {axis}: need finite lower < upper, got [{a}, {b}]")
            if m < 1:
                raise ValueError(f"axis {axis}: cells must be positive, got {m}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def interval(cls, a: float, b: float, cells: int) -> "GridDomain":
        return cls((a,), (b,), (cells,))

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float],
            cells: Sequence[int] | int) -> "GridDomain":
        if np.isscalar(cells):
            cells = (int(cells),) * len(lower)
        return cls(tuple(lower), tuple(upper), tuple(cells))

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @cached_property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / np.asarray(self.cells)

    @property
    def max_spacing(self) -> float:
        return float(self.spacing.max())

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def measure(self) -> float:
        return self.cell_volume * self.size

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        """Cell-centre coordinates along each axis."""
        return tuple(
            a + (np.arange(m) + 0.5) * d
            for a, m, d in zip(self.lower, self.cells, self.spacing)
        )

    @cached_property
    def centers(self) -> np.ndarray:
        """``(size, dim)`` array of cell centres in row-major order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts.flags.writeable = False
        return pts

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Flat cell index for each point, ``-1`` for points outside the closed box."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            pts = pts.reshape(-1, self.dim)
        lower = np.asarray(self.lower)
        upper = np.asarray(self.upper)
        idx = np.floor((pts - lower) / self.spacing).astype(np.int64)
        cells = np.asarray(self.cells)
        # the upper face belongs to the last cell
        idx = np.where(pts == upper, cells - 1, idx)
        inside = np.all((pts >= lower) & (pts <= upper), axis=1)
        flat = np.ravel_multi_index(tuple(np.clip(idx, 0, cells - 1).T), self.cells)
        return np.where(inside, flat, -1)

    def describe(self) -> str:
        box = " x ".join(f"[{a:g}, {b:g}]" for a, b in zip(self.lower, self.upper))
        return f"{box} with {'x'.join(map(str, self.cells))} cells"


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Cell-centre samples of a real function, zero-extended beyond the box."""

    domain: GridDomain
    samples: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.samples, dtype=float).reshape(-1)
        if values.size != self.domain.size:
            raise ValueError(
                f"expected {self.domain.size} samples for {self.domain.describe()}, got {values.size}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "samples", values)

    @classmethod
    def from_callable(cls, domain: GridDomain, fn: Callable[..., np.ndarray]) -> "GridFunction":
        """Sample ``fn(x)`` (1-D) or ``fn(x, y)`` (2-D) at the cell centres."""
        values = fn(*domain.centers.T)
        return cls(domain, np.broadcast_to(np.asarray(values, dtype=float), (domain.size,)))

    @classmethod
    def constant(cls, domain: GridDomain, value: float) -> "GridFunction":
        return cls(domain, np.full(domain.size, float(value)))

    @classmethod
    def zeros(cls, domain: GridDomain) -> "GridFunction":
        return cls.constant(domain, 0.0)

    def as_grid(self) -> np.ndarray:
        return self.samples.reshape(self.domain.shape)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Piecewise-constant evaluation; zero outside the box."""
        idx = self.domain.locate(points)
        return np.where(idx >= 0, self.samples[np.maximum(idx, 0)], 0.0)

    def sup(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.samples.size else 0.0

    def is_zero(self) -> bool:
        return not np.any(self.samples)

    def _same(self, other: "GridFunction") -> None:
        if other.domain != self.domain:
            raise ValueError("grid functions live on different domains")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._same(other)
            return GridFunction(self.domain, self.samples + other.samples)
        return GridFunction(self.domain, self.samples + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._same(other)
            return GridFunction(self.domain, self.samples - other.samples)
        return GridFunction(self.domain, self.samples - float(other))

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._same(other)
            return GridFunction(self.domain, self.samples * other.samples)
        return GridFunction(self.domain, self.samples * float(other))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return GridFunction(self.domain, self.samples / float(scalar))

    def __neg__(self):
        return GridFunction(self.domain, -self.samples)

    def __abs__(self):
        return GridFunction(self.domain, np.abs(self.samples))


@dataclass(frozen=True, eq=False)
class IndicatorSet:
    """A union of grid cells, used as a measurable set."""

    domain: GridDomain
    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.array(self.mask, dtype=bool).reshape(-1)
        if mask.size != self.domain.size:
            raise ValueError(f"mask has {mask.size} entries, domain has {self.domain.size} cells")
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @property
    def measure(self) -> float:
        return int(self.mask.sum()) * self.domain.cell_volume

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def is_empty(self) -> bool:
        return not self.mask.any()

    def indicator(self) -> GridFunction:
        return GridFunction(self.domain, self.mask.astype(float))

    def _same(self, other: "IndicatorSet") -> None:
        if other.domain != self.domain:
            raise ValueError("sets live on different domains")

    def __or__(self, other: "IndicatorSet") -> "IndicatorSet":
        self._same(other)
        return IndicatorSet(self.domain, self.mask | other.mask)

    def __and__(self, other: "IndicatorSet") -> "IndicatorSet":
        self._same(other)
        return IndicatorSet(self.domain, self.mask & other.mask)

    def __sub__(self, other: "IndicatorSet") -> "IndicatorSet":
        self._same(other)
        return IndicatorSet(self.domain, self.mask & ~other.mask)

    def __xor__(self, other: "IndicatorSet") -> "IndicatorSet":
        self._same(other)
        return IndicatorSet(self.domain, self.mask ^ other.mask)


def integrate(f: GridFunction) -> float:
    """Midpoint rule: sum of samples times the cell volume."""
    return float(np.sum(f.samples) * f.domain.cell_volume)


def ball_indicator(center: Sequence[float] | float, radius: float,
                   domain: GridDomain) -> IndicatorSet:
    """Cells whose centre lies in the open ball ``B(center, radius)``."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    c = np.asarray(center, dtype=float).reshape(-1)
    if c.size != domain.dim:
        raise ValueError(f"center has dimension {c.size}, domain has {domain.dim}")
    dist = np.linalg.norm(domain.centers - c, axis=1)
    return IndicatorSet(domain, inside_open_ball(dist, radius))


def box_indicator(lower: Sequence[float] | float, upper: Sequence[float] | float,
                  domain: GridDomain) -> IndicatorSet:
    """Cells whose centre lies in the half-open box ``[lower, upper)``."""
    lo = np.asarray(lower, dtype=float).reshape(-1)
    hi = np.asarray(upper, dtype=float).reshape(-1)
    pts = domain.centers
    return IndicatorSet(domain, np.all((pts >= lo) & (pts < hi), axis=1))


def symmetric_difference_measure(a: IndicatorSet, b: IndicatorSet) -> float:
    if a.domain != b.domain:
        raise ValueError("sets live on different domains")
    return int(np.count_nonzero(a.mask ^ b.mask)) * a.domain.cell_volume
