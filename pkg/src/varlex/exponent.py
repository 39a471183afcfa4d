"""Variable exponents p(x), their conjugates and regularity diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import GridDomain

# Pair budget for the log-Hoelder scan before switching to subsampling.
MAX_EXHAUSTIVE_PAIRS = 1_000_000


def conjugate(values: np.ndarray) -> np.ndarray:
    """Pointwise conjugate exponent with ``1 <-> inf``."""
    v = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = v / (v - 1.0)
    out = np.where(v == 1.0, np.inf, out)
    return np.where(np.isinf(v), 1.0, out)


@dataclass(frozen=True, eq=False)
class ExponentField:
    domain: GridDomain
    samples: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.samples, dtype=float).reshape(-1)
        if p.size != self.domain.size:
            raise ValueError(f"expected {self.domain.size} exponent samples, got {p.size}")
        if not np.all(np.isfinite(p)):
            raise ValueError("exponent must be finite everywhere (p_plus < inf)")
        if np.any(p < 1.0):
            raise ValueError(f"exponent must satisfy p >= 1, min sample is {p.min():.6g}")
        p.flags.writeable = False
        object.__setattr__(self, "samples", p)

    @classmethod
    def constant(cls, domain: GridDomain, value: float) -> "ExponentField":
        return cls(domain, np.full(domain.size, float(value)))

    @classmethod
    def from_callable(cls, domain: GridDomain, fn: Callable[..., np.ndarray]) -> "ExponentField":
        values = np.broadcast_to(np.asarray(fn(*domain.centers.T), dtype=float), (domain.size,))
        return cls(domain, values)

    @property
    def p_minus(self) -> float:
        return float(self.samples.min())

    @property
    def p_plus(self) -> float:
        return float(self.samples.max())

    def bounds_on(self, mask: np.ndarray) -> tuple[float, float]:
        """(min, max) of p over the cells selected by ``mask``."""
        sel = self.samples[np.asarray(mask, dtype=bool)]
        if sel.size == 0:
            raise ValueError("empty selection")
        return float(sel.min()), float(sel.max())

    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    def dual(self) -> "DualExponentField":
        return dual_exponent(self)


@dataclass(frozen=True, eq=False)
class DualExponentField:
    """Conjugate exponent q(x); ``np.inf`` marks cells where p(x) = 1."""

    domain: GridDomain
    samples: np.ndarray

    def __post_init__(self) -> None:
        q = np.array(self.samples, dtype=float).reshape(-1)
        if q.size != self.domain.size:
            raise ValueError(f"expected {self.domain.size} samples, got {q.size}")
        if np.any(np.isnan(q)) or np.any(q < 1.0):
            raise ValueError("dual exponent must take values in [1, inf]")
        q.flags.writeable = False
        object.__setattr__(self, "samples", q)

    @property
    def q_minus(self) -> float:
        return float(self.samples.min())

    @property
    def q_plus(self) -> float:
        return float(self.samples.max())

    @property
    def infinite(self) -> np.ndarray:
        return np.isinf(self.samples)

    def dual(self) -> ExponentField:
        if np.any(self.samples == 1.0):
            raise ValueError("q = 1 somewhere: the conjugate would be infinite")
        return ExponentField(self.domain, conjugate(self.samples))


def dual_exponent(p: ExponentField) -> DualExponentField:
    return DualExponentField(p.domain, conjugate(p.samples))


@dataclass(frozen=True)
class LogHolderReport:
    constant: float
    worst_pair: tuple[int, int] | None
    distance: float
    pairs_checked: int
    exhaustive: bool


def _log_holder_scores(p: np.ndarray, pts: np.ndarray, i: np.ndarray, j: np.ndarray):
    d = np.linalg.norm(pts[i] - pts[j], axis=1)
    ok = (d > 0) & (d <= 0.5)
    with np.errstate(divide="ignore"):
        score = np.where(ok, np.abs(p[i] - p[j]) * -np.log(np.where(ok, d, 1.0)), -np.inf)
    return score, d


def log_holder_check(p: ExponentField, *, max_pairs: int = MAX_EXHAUSTIVE_PAIRS,
                     seed: int = 0) -> LogHolderReport:
    """Smallest C with ``|p(x)-p(y)| <= C / (-ln|x-y|)`` over sampled pairs, ``|x-y| <= 1/2``.

    All pairs are scanned when their count fits ``max_pairs``; otherwise a
    seeded uniform subsample of ``max_pairs`` pairs plus every pair of
    axis-neighbouring cells.
    """
    n = p.domain.size
    if n < 2:
        raise ValueError("log-Hoelder check needs at least two cells")
    pts = p.domain.centers
    vals = p.samples
    total = n * (n - 1) // 2
    best, best_pair, best_d = 0.0, None, math.nan
    checked = 0

    def consider(i: np.ndarray, j: np.ndarray) -> None:
        nonlocal best, best_pair, best_d, checked
        if i.size == 0:
            return
        score, d = _log_holder_scores(vals, pts, i, j)
        checked += int(i.size)
        k = int(np.argmax(score))
        if score[k] > best or (best_pair is None and np.isfinite(score[k])):
            best, best_pair, best_d = float(max(score[k], 0.0)), (int(i[k]), int(j[k])), float(d[k])

    exhaustive = total <= max_pairs
    if exhaustive:
        rows = max(1, 2_000_000 // n)
        for start in range(0, n, rows):
            ii = np.arange(start, min(n, start + rows))
            I, J = np.meshgrid(ii, np.arange(n), indexing="ij")
            keep = J > I
            consider(I[keep], J[keep])
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, size=max_pairs)
        j = rng.integers(0, n, size=max_pairs)
        keep = i != j
        consider(i[keep], j[keep])
        grid_idx = np.arange(n).reshape(p.domain.shape)
        for axis in range(p.domain.dim):
            a = np.take(grid_idx, np.arange(grid_idx.shape[axis] - 1), axis=axis).ravel()
            b = np.take(grid_idx, np.arange(1, grid_idx.shape[axis]), axis=axis).ravel()
            consider(a, b)
    return LogHolderReport(best, best_pair, best_d, checked, exhaustive)


def decay_check(p: ExponentField, p_inf: float) -> float:
    """Smallest C with ``|p(x) - p_inf| <= C / ln(2 + |x|)`` over the cells."""
    radius = np.linalg.norm(p.domain.centers, axis=1)
    return float(np.max(np.abs(p.samples - p_inf) * np.log(2.0 + radius)))


EXPONENT_PRESETS = {
    "const:<v>": "p(x) = v",
    "affine:<a>,<b>": "p(x) = a + b*x1",
    "sin:<base>,<amp>,<freq>": "p(x) = base + amp*sin(2*pi*freq*x1)",
}


def _floats(text: str, count: int, name: str) -> list[float]:
    parts = [s for s in text.split(",") if s.strip()]
    if len(parts) != count:
        raise ValueError(f"exponent preset {name!r} takes {count} parameter(s), got {text!r}")
    try:
        return [float(s) for s in parts]
    except ValueError:
        raise ValueError(f"exponent preset {name!r}: non-numeric parameter in {text!r}") from None


def parse_exponent(spec: str, domain: GridDomain) -> ExponentField:
    """Build an exponent from a preset string such as ``"affine:1.5,1"``."""
    name, _, args = spec.strip().partition(":")
    name = name.strip().lower()
    x1 = domain.centers[:, 0]
    if name == "const":
        (v,) = _floats(args, 1, name)
        values = np.full(domain.size, v)
    elif name == "affine":
        a, b = _floats(args, 2, name)
        values = a + b * x1
    elif name == "sin":
        base, amp, freq = _floats(args, 3, name)
        values = base + amp * np.sin(2 * np.pi * freq * x1)
    else:
        raise ValueError(f"unknown exponent preset {spec!r}; known: {', '.join(EXPONENT_PRESETS)}")
    return ExponentField(domain, values)
