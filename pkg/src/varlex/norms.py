"""Modular, Luxemburg norm and the basic inequalities of L^{p(.)}.

The norm is the root of ``lambda -> I_p(f / lambda) = 1``.  Writing
``mu = ln(lambda)``, ``ln I_p(f e^{-mu})`` is a log-sum-exp of affine functions
of ``mu`` and hence convex and decreasing, so Newton steps on it taken from the
left of the root never overshoot.  They run inside the norm-modular bracket and
fall back to bisection whenever a step leaves it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exponent import DualExponentField, ExponentField, dual_exponent
from .grid import GridFunction, IndicatorSet, integrate

MODULAR_TOL = 1e-12
MAX_ITER = 200
NORM_RTOL = 1e-9
INEQ_SLACK = 1e-8


@dataclass(frozen=True)
class NormResult:
    value: float
    modular_at_value: float
    bisection_iterations: int

    def __float__(self) -> float:
        return self.value


def _check_pair(f: GridFunction, p) -> None:
    if f.domain != p.domain:
        raise ValueError("function and exponent live on different domains")


def modular(f: GridFunction, p: ExponentField) -> float:
    _check_pair(f, p)
    return float(np.sum(np.abs(f.samples) ** p.samples) * f.domain.cell_volume)


def modular_bracket(m: float, p_minus: float, p_plus: float) -> tuple[float, float]:
    """Bounds on the norm from its modular ``m``.

    ``m^(1/p_minus) <= ||f|| <= m^(1/p_plus)`` when ``m <= 1``, reversed when ``m >= 1``.
    """
    if m <= 0:
        return 0.0, 0.0
    a, b = m ** (1.0 / p_minus), m ** (1.0 / p_plus)
    return min(a, b), max(a, b)


def _luxemburg_rows(a: np.ndarray, p: np.ndarray, weight: float,
                    tol: float = MODULAR_TOL, max_iter: int = MAX_ITER):
    """Luxemburg norms of the rows of ``a`` (non-negative), sharing exponent ``p``.

    Returns ``(values, modular_at_value, iterations)`` arrays.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    rows = a.shape[0]
    values = np.zeros(rows)
    mods = np.zeros(rows)
    iters = np.zeros(rows, dtype=np.int64)
    if not np.all(np.isfinite(a)):
        raise ValueError("samples must be finite")
    if rows == 0 or a.shape[1] == 0:
        return values, mods, iters

    with np.errstate(divide="ignore"):
        log_a = np.log(a)
    plog = p * log_a  # -inf where a == 0
    m0 = np.sum(np.exp(plog), axis=1) * weight
    active = np.flatnonzero(m0 > 0)
    if active.size == 0:
        return values, mods, iters

    p_lo, p_hi = float(p.min()), float(p.max())
    log_m0 = np.log(m0[active])
    # bracket in mu = ln(lambda)
    lo = np.minimum(log_m0 / p_lo, log_m0 / p_hi)
    hi = np.maximum(log_m0 / p_lo, log_m0 / p_hi)

    def evaluate(idx: np.ndarray, mu: np.ndarray):
        e = np.exp(plog[idx] - p * mu[:, None])
        s = np.sum(e, axis=1) * weight
        ds = np.sum(e * p, axis=1) * weight
        return s, ds

    # rounding may put the root marginally outside the analytic bracket
    for _ in range(64):
        s_lo, _ = evaluate(active, lo)
        bad = s_lo < 1.0
        if not bad.any():
            break
        lo = np.where(bad, lo - np.log(2.0), lo)
    for _ in range(64):
        s_hi, _ = evaluate(active, hi)
        bad = s_hi > 1.0
        if not bad.any():
            break
        hi = np.where(bad, hi + np.log(2.0), hi)

    mu = lo.copy()
    s, ds = evaluate(active, mu)
    count = np.zeros(active.size, dtype=np.int64)
    todo = np.abs(s - 1.0) > tol
    for _ in range(max_iter):
        if not todo.any():
            break
        k = np.flatnonzero(todo)
        # Newton on ln s(mu); s' = -ds
        step = np.log(s[k]) * s[k] / ds[k]
        cand = mu[k] + step
        outside = ~((cand > lo[k]) & (cand < hi[k])) | ~np.isfinite(cand)
        cand = np.where(outside, 0.5 * (lo[k] + hi[k]), cand)
        stalled = (cand == mu[k]) | (cand <= lo[k]) | (cand >= hi[k])
        s_new, ds_new = evaluate(active[k], cand)
        above = s_new >= 1.0
        lo[k] = np.where(above, cand, lo[k])
        hi[k] = np.where(above, hi[k], cand)
        mu[k], s[k], ds[k] = cand, s_new, ds_new
        count[k] += 1
        todo[k] = (np.abs(s_new - 1.0) > tol) & ~stalled
    values[active] = np.exp(mu)
    mods[active] = s
    iters[active] = count
    return values, mods, iters


def luxemburg_norm(f: GridFunction, p: ExponentField) -> NormResult:
    """``inf{lambda > 0 : I_p(f / lambda) <= 1}``."""
    _check_pair(f, p)
    v, m, it = _luxemburg_rows(np.abs(f.samples)[None, :], p.samples, f.domain.cell_volume)
    return NormResult(float(v[0]), float(m[0]), int(it[0]))


def norm(f: GridFunction, p: ExponentField) -> float:
    return luxemburg_norm(f, p).value


def batch_norms(samples: np.ndarray, p: ExponentField, chunk: int = 256) -> np.ndarray:
    """Norms of each row of a ``(m, size)`` sample matrix."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[1] != p.domain.size:
        raise ValueError("sample rows do not match the exponent's domain")
    out = np.empty(samples.shape[0])
    for start in range(0, samples.shape[0], chunk):
        block = np.abs(samples[start:start + chunk])
        out[start:start + chunk] = _luxemburg_rows(block, p.samples, p.domain.cell_volume)[0]
    return out


def luxemburg_norm_infty(g: GridFunction, q: DualExponentField) -> float:
    """Luxemburg norm allowing ``q = inf`` on part of the domain.

    On ``{q = inf}`` the modular contributes 0 while ``|g / lambda| <= 1`` and
    ``+inf`` otherwise, so the norm is the larger of ``ess sup_{q=inf} |g|`` and
    the ordinary norm over ``{q < inf}``.
    """
    _check_pair(g, q)
    inf_cells = q.infinite
    a = np.abs(g.samples)
    if not np.all(np.isfinite(a)):
        raise ValueError("samples must be finite")
    sup_part = float(a[inf_cells].max()) if inf_cells.any() else 0.0
    fin = ~inf_cells
    fin_part = 0.0
    if fin.any():
        fin_part = float(_luxemburg_rows(a[fin][None, :], q.samples[fin], g.domain.cell_volume)[0][0])
    return max(sup_part, fin_part)


@dataclass(frozen=True)
class HolderCheck:
    lhs: float
    rhs: float
    k: float
    holds: bool


def holder_constant(p: ExponentField) -> float:
    """``sup 1/p + sup 1/q`` with ``1/inf = 0``."""
    q = dual_exponent(p)
    return 1.0 / p.p_minus + (0.0 if np.isinf(q.q_minus) else 1.0 / q.q_minus)


def holder_check(f: GridFunction, g: GridFunction, p: ExponentField,
                 slack: float = INEQ_SLACK) -> HolderCheck:
    _check_pair(f, p)
    _check_pair(g, p)
    lhs = integrate(abs(f * g))
    k = holder_constant(p)
    rhs = k * luxemburg_norm(f, p).value * luxemburg_norm_infty(g, dual_exponent(p))
    return HolderCheck(lhs, rhs, k, lhs <= rhs + slack)


@dataclass(frozen=True)
class IndicatorBounds:
    lower: float
    upper: float
    actual: float
    holds: bool
    measure: float
    p_minus: float
    p_plus: float


def indicator_norm_bounds(E: IndicatorSet, p: ExponentField, *, over: str = "set",
                          slack: float = INEQ_SLACK) -> IndicatorBounds:
    """Bracket ``||chi_E||`` between ``|E|^(1/p_plus)`` and ``|E|^(1/p_minus)``.

    Which power is the lower end depends on ``|E| <= 1`` versus ``|E| >= 1``.
    ``over="set"`` takes the exponent range over E, ``over="domain"`` over the box.
    """
    if E.domain != p.domain:
        raise ValueError("set and exponent live on different domains")
    if E.is_empty():
        raise ValueError("indicator bounds need a set of positive measure")
    if over == "set":
        pm, pp = p.bounds_on(E.mask)
    elif over == "domain":
        pm, pp = p.p_minus, p.p_plus
    else:
        raise ValueError(f"over must be 'set' or 'domain', got {over!r}")
    mu = E.measure
    a, b = mu ** (1.0 / pp), mu ** (1.0 / pm)
    lower, upper = min(a, b), max(a, b)
    actual = luxemburg_norm(E.indicator(), p).value
    holds = lower - slack <= actual <= upper + slack
    return IndicatorBounds(lower, upper, actual, holds, mu, pm, pp)


def ideal_check(f: GridFunction, g: GridFunction, p: ExponentField,
                slack: float = INEQ_SLACK) -> bool:
    """Whether ``|f| <= |g|`` pointwise gives ``||f|| <= ||g||``."""
    _check_pair(f, p)
    _check_pair(g, p)
    if np.any(np.abs(f.samples) > np.abs(g.samples)):
        raise ValueError("ideal check needs |f| <= |g| at every cell")
    return luxemburg_norm(f, p).value <= luxemburg_norm(g, p).value + slack
