"""Steklov averages, potential-type mollifiers and the bounds built on them.

Convolutions are direct sums over a stencil of integer cell offsets, with the
function zero-extended beyond the box.  The Steklov stencil is the set of
offsets whose centre-to-centre distance is inside the open ball of radius h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _quad
from scipy.signal import convolve2d

from .exponent import ExponentField, dual_exponent
from .families import FunctionFamily
from .grid import GridDomain, GridFunction, ball_indicator, inside_open_ball
from .norms import INEQ_SLACK, batch_norms, holder_constant

MAX_DENSE_CELLS = 4096
NORMALIZATIONS = ("continuum", "discrete")

# Gamma(n/2 + 1) for the supported dimensions
_GAMMA_HALF_N_PLUS_1 = {1: math.sqrt(math.pi) / 2.0, 2: 1.0}


def unit_ball_volume(n: int) -> float:
    """``pi^(n/2) / Gamma(n/2 + 1)``: 2 for n = 1, pi for n = 2."""
    if n not in _GAMMA_HALF_N_PLUS_1:
        raise ValueError(f"unit ball volume only available for n in (1, 2), got {n}")
    return math.pi ** (n / 2.0) / _GAMMA_HALF_N_PLUS_1[n]


@dataclass(frozen=True)
class SteklovKernel:
    dim: int
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError(f"Steklov radius must be positive, got {self.radius}")
        unit_ball_volume(self.dim)

    @property
    def unit_ball_volume(self) -> float:
        return unit_ball_volume(self.dim)

    @property
    def ball_volume(self) -> float:
        return self.unit_ball_volume * self.radius**self.dim

    @property
    def height(self) -> float:
        """Value of the normalised ball kernel inside its support."""
        return 1.0 / self.ball_volume


def _offset_grid(domain: GridDomain, reach: float) -> tuple[np.ndarray, np.ndarray]:
    """All integer offsets within ``reach`` along each axis and their physical lengths."""
    m = [int(math.floor(reach / d)) + 1 for d in domain.spacing]
    axes = [np.arange(-k, k + 1) for k in m]
    mesh = np.meshgrid(*axes, indexing="ij")
    offsets = np.stack([g.ravel() for g in mesh], axis=1)
    lengths = np.linalg.norm(offsets * domain.spacing, axis=1)
    return offsets, lengths


def _check_resolution(domain: GridDomain, radius: float, allow_under_resolved: bool) -> None:
    if not allow_under_resolved and radius < 2 * domain.max_spacing:
        raise ValueError(
            f"radius {radius:g} is under-resolved on a grid with spacing {domain.max_spacing:g} "
            f"(need radius >= 2 x spacing); pass allow_under_resolved=True to force"
        )


@dataclass(frozen=True, eq=False)
class Stencil:
    """Convolution weights ``w[offset]``: ``(K f)_i = sum_j w[i - j] f_j``."""

    domain: GridDomain
    offsets: np.ndarray
    weights: np.ndarray

    @cached_property
    def kernel_array(self) -> np.ndarray:
        reach = np.abs(self.offsets).max(axis=0) if self.offsets.size else np.zeros(self.domain.dim, int)
        arr = np.zeros(tuple(2 * r + 1 for r in reach))
        arr[tuple((self.offsets + reach).T)] = self.weights
        return arr

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def apply_samples(self, samples: np.ndarray) -> np.ndarray:
        grid = np.asarray(samples, dtype=float).reshape(self.domain.shape)
        k = self.kernel_array
        reach = [(s - 1) // 2 for s in k.shape]
        if self.domain.dim == 1:
            full = np.convolve(grid, k, mode="full")
            out = full[reach[0]:reach[0] + grid.shape[0]]
        else:
            full = convolve2d(grid, k, mode="full")
            out = full[reach[0]:reach[0] + grid.shape[0], reach[1]:reach[1] + grid.shape[1]]
        return out.ravel()

    def apply(self, f: GridFunction) -> GridFunction:
        if f.domain != self.domain:
            raise ValueError("function and stencil live on different domains")
        return GridFunction(self.domain, self.apply_samples(f.samples))

    def dense(self) -> np.ndarray:
        n = self.domain.size
        if n > MAX_DENSE_CELLS:
            raise ValueError(
                f"dense operator needs {n} x {n} entries (guard is {MAX_DENSE_CELLS} cells); "
                "use matrix-free application (steklov_apply) instead"
            )
        idx = np.indices(self.domain.shape).reshape(self.domain.dim, -1).T
        diff = idx[:, None, :] - idx[None, :, :]
        k = self.kernel_array
        reach = np.array([(s - 1) // 2 for s in k.shape])
        shifted = diff + reach
        inside = np.all((shifted >= 0) & (shifted < np.array(k.shape)), axis=2)
        mat = np.zeros((n, n))
        sel = tuple(shifted[inside].T)
        mat[inside] = k[sel]
        return mat


def steklov_stencil(domain: GridDomain, h: float, *, normalization: str = "continuum",
                    allow_under_resolved: bool = False) -> Stencil:
    kernel = SteklovKernel(domain.dim, h)
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
    _check_resolution(domain, h, allow_under_resolved)
    offsets, lengths = _offset_grid(domain, h)
    inside = inside_open_ball(lengths, h)
    offsets = offsets[inside]
    if normalization == "continuum":
        w = domain.cell_volume * kernel.height
    else:
        w = 1.0 / len(offsets)
    return Stencil(domain, offsets, np.full(len(offsets), w))


def steklov_apply(f: GridFunction, h: float, *, normalization: str = "continuum",
                  allow_under_resolved: bool = False) -> GridFunction:
    """Average of f over the open ball ``B(x, h)``, f zero outside the box.

    ``normalization="continuum"`` divides by ``v_n h^n``; ``"discrete"`` divides
    by the cell mass of the stencil, which preserves constants exactly away from
    the boundary.
    """
    return steklov_stencil(f.domain, h, normalization=normalization,
                           allow_under_resolved=allow_under_resolved).apply(f)


def ball_integral(f: GridFunction, h: float, *, allow_under_resolved: bool = False) -> GridFunction:
    """``x -> integral of f over B(x, h)`` (zero extension), i.e. ``v_n h^n f_h``."""
    st = steklov_stencil(f.domain, h, allow_under_resolved=allow_under_resolved)
    unit = Stencil(f.domain, st.offsets, np.full(len(st.offsets), f.domain.cell_volume))
    return unit.apply(f)


@dataclass(frozen=True, eq=False)
class SteklovMatrix:
    domain: GridDomain
    radius: float
    matrix: np.ndarray
    normalization: str = "continuum"
    under_resolved: bool = False

    @property
    def size(self) -> int:
        return self.domain.size

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def __matmul__(self, samples: np.ndarray) -> np.ndarray:
        return self.matrix @ samples


def steklov_matrix(domain: GridDomain, h: float, *, normalization: str = "continuum",
                   allow_under_resolved: bool = False) -> SteklovMatrix:
    """Dense N x N matrix of the Steklov operator (N <= 4096)."""
    if domain.size > MAX_DENSE_CELLS:
        raise ValueError(
            f"domain has {domain.size} cells, above the dense guard of {MAX_DENSE_CELLS}; "
            "use matrix-free application (steklov_apply) instead"
        )
    st = steklov_stencil(domain, h, normalization=normalization,
                         allow_under_resolved=allow_under_resolved)
    under = h < 2 * domain.max_spacing
    mat = st.dense()
    mat.flags.writeable = False
    return SteklovMatrix(domain, h, mat, normalization, under)


# --------------------------------------------------------------------------
# approximate identities

Profile = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ApproximateIdentity:
    """Radial kernel ``phi(x) = profile(|x|)`` supported in ``|x| < support``."""

    name: str
    dim: int
    profile: Profile
    support: float
    ref_cells: int = 0
    mass_tol: float = 1e-6

    def __post_init__(self) -> None:
        if not self.support > 0:
            raise ValueError("kernel support radius must be positive")
        if self.ref_cells <= 0:
            object.__setattr__(self, "ref_cells", 4000 if self.dim == 1 else 400)
        m = self.mass
        if abs(m - 1.0) > self.mass_tol:
            raise ValueError(f"kernel {self.name!r} has mass {m:.9g}, expected 1")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(np.atleast_2d(x).reshape(-1, self.dim), axis=1)
        return np.where(r < self.support, self.profile(r), 0.0)

    @cached_property
    def mass(self) -> float:
        """Radial quadrature of the kernel, ``int phi = int_0^R phi(r) n v_n r^(n-1) dr``."""
        shell = self.dim * unit_ball_volume(self.dim)
        val, _ = _quad.quad(lambda r: float(self.profile(np.array([r]))[0]) * shell * r ** (self.dim - 1),
                            0.0, self.support, limit=200, epsabs=1e-13, epsrel=1e-12)
        return val

    @cached_property
    def reference_grid(self) -> GridDomain:
        R = self.support
        return GridDomain.box((-R,) * self.dim, (R,) * self.dim, self.ref_cells)

    @cached_property
    def samples(self) -> np.ndarray:
        return self(self.reference_grid.centers)

    def scaled_stencil(self, domain: GridDomain, t: float, *,
                       allow_under_resolved: bool = False) -> Stencil:
        """Weights of ``phi_t(x) = t^-n phi(x / t)`` times the cell volume."""
        if domain.dim != self.dim:
            raise ValueError(f"kernel is {self.dim}-D, domain is {domain.dim}-D")
        if not t > 0:
            raise ValueError(f"mollifier scale must be positive, got {t}")
        _check_resolution(domain, t * self.support, allow_under_resolved)
        offsets, lengths = _offset_grid(domain, t * self.support)
        inside = inside_open_ball(lengths, t * self.support)
        offsets, lengths = offsets[inside], lengths[inside]
        w = self.profile(lengths / t) * (domain.cell_volume / t**self.dim)
        return Stencil(domain, offsets, np.asarray(w, dtype=float))


def ball_kernel(dim: int) -> ApproximateIdentity:
    height = 1.0 / unit_ball_volume(dim)
    return ApproximateIdentity("ball", dim, lambda r: np.full(np.shape(r), height), 1.0)


def triangle_kernel(dim: int) -> ApproximateIdentity:
    # int over the unit ball of (1 - |x|) is 1 (n=1) and pi/3 (n=2)
    c = 1.0 if dim == 1 else 3.0 / math.pi
    return ApproximateIdentity("triangle", dim, lambda r: c * np.maximum(0.0, 1.0 - r), 1.0)


def gauss_truncated_kernel(dim: int, radius: float) -> ApproximateIdentity:
    if not radius > 0:
        raise ValueError("gauss-truncated radius must be positive")
    if dim == 1:
        z = math.sqrt(2 * math.pi) * math.erf(radius / math.sqrt(2))
    else:
        z = 2 * math.pi * (1.0 - math.exp(-radius**2 / 2))
    return ApproximateIdentity(f"gauss-truncated:{radius:g}", dim,
                               lambda r: np.exp(-np.square(r) / 2) / z, radius)


def kernel_from_profile(name: str, dim: int, profile: Profile, support: float) -> ApproximateIdentity:
    """Radial kernel rescaled to unit mass."""
    raw = ApproximateIdentity(name, dim, profile, support, mass_tol=np.inf)
    m = raw.mass
    if not m > 0:
        raise ValueError("kernel profile must have positive mass")
    return ApproximateIdentity(name, dim, lambda r: profile(r) / m, support)


KERNEL_PRESETS = {
    "ball": "normalised indicator of the unit ball (Steklov kernel)",
    "triangle": "max(0, 1 - |x|), renormalised to mass 1 in 2-D",
    "gauss-truncated:<R>": "exp(-|x|^2 / 2) cut at |x| = R, renormalised to mass 1",
}


def parse_kernel(spec: str, dim: int) -> ApproximateIdentity:
    name, _, args = spec.strip().partition(":")
    name = name.strip().lower()
    if name == "ball" and not args:
        return ball_kernel(dim)
    if name == "triangle" and not args:
        return triangle_kernel(dim)
    if name == "gauss-truncated":
        try:
            return gauss_truncated_kernel(dim, float(args))
        except ValueError:
            raise ValueError(f"gauss-truncated needs a positive radius, got {spec!r}") from None
    raise ValueError(f"unknown kernel preset {spec!r}; known: {', '.join(KERNEL_PRESETS)}")


def mollify(f: GridFunction, phi: ApproximateIdentity, t: float, *,
            allow_under_resolved: bool = False) -> GridFunction:
    """Discrete ``phi_t * f`` with f zero outside the box."""
    return phi.scaled_stencil(f.domain, t, allow_under_resolved=allow_under_resolved).apply(f)


def radial_majorant(phi: ApproximateIdentity) -> tuple[np.ndarray, float]:
    """``sup_{|y| >= |x|} |phi(y)|`` at the reference-grid points, and its integral.

    The sup runs over the reference samples: sort by radius, take a running max
    from the outside in, and give tied radii the max of their group.
    """
    ref = phi.reference_grid
    r = np.linalg.norm(ref.centers, axis=1)
    vals = np.abs(phi.samples)
    radii, inverse = np.unique(r, return_inverse=True)
    group_max = np.zeros(radii.size)
    np.maximum.at(group_max, inverse, vals)
    outer = np.maximum.accumulate(group_max[::-1])[::-1]
    maj = outer[inverse]
    return maj, float(maj.sum() * ref.cell_volume)


# --------------------------------------------------------------------------
# bound checks


@dataclass(frozen=True)
class MollifierBoundReport:
    c_est: float
    scales: tuple[float, ...]
    ratios: np.ndarray = field(repr=False)  # (members, scales)

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.c_est))


def mollifier_bound_check(family: FunctionFamily, phi: ApproximateIdentity,
                          t_schedule: Sequence[float], p: ExponentField, *,
                          allow_under_resolved: bool = False) -> MollifierBoundReport:
    """Empirical constant ``max ||phi_t * f|| / ||f||`` over members and scales."""
    base = family.norms(p)
    if np.any(base == 0):
        raise ValueError("mollifier bound ratios need nonzero members")
    ratios = np.empty((len(family), len(t_schedule)))
    for j, t in enumerate(t_schedule):
        st = phi.scaled_stencil(family.domain, t, allow_under_resolved=allow_under_resolved)
        smoothed = np.stack([st.apply_samples(f.samples) for f in family])
        ratios[:, j] = batch_norms(smoothed, p) / base
    return MollifierBoundReport(float(ratios.max()), tuple(float(t) for t in t_schedule), ratios)


@dataclass(frozen=True)
class UniformBoundReport:
    h: float
    ball_volume: float
    k: float
    norm_bound: float
    q_minus: float
    q_plus: float
    lhs: np.ndarray = field(repr=False)
    rhs: float
    rhs_conservative: float
    worst_ratio: float
    violations: int

    @property
    def holds(self) -> bool:
        return self.violations == 0


def uniform_bound_check(family: FunctionFamily, h: float, p: ExponentField, *,
                        slack: float = INEQ_SLACK, allow_under_resolved: bool = False) -> UniformBoundReport:
    """Check ``sup_x v_n h^n |f_h(x)| <= k M (v_n h^n)^(1/q_minus)`` for every member.

    ``rhs_conservative`` uses ``1/q_plus`` instead, the exponent that the
    characteristic-function estimate actually supports for a ball of measure
    at most 1; it is reported next to the stated bound.
    """
    vol = SteklovKernel(family.domain.dim, h).ball_volume
    if vol > 1.0:
        raise ValueError(f"v_n h^n = {vol:.6g} > 1; the uniform bound needs v_n h^n <= 1")
    q = dual_exponent(p)
    k = holder_constant(p)
    M = family.norm_bound(p)
    inv_qm = 0.0 if np.isinf(q.q_minus) else 1.0 / q.q_minus
    inv_qp = 0.0 if np.isinf(q.q_plus) else 1.0 / q.q_plus
    rhs = k * M * vol**inv_qm
    rhs_c = k * M * vol**inv_qp
    lhs = np.array([ball_integral(f, h, allow_under_resolved=allow_under_resolved).sup() for f in family])
    ratio = float((lhs / rhs).max()) if rhs > 0 else (0.0 if not lhs.any() else np.inf)
    violations = int(np.count_nonzero(lhs > rhs + slack))
    return UniformBoundReport(h, vol, k, M, q.q_minus, q.q_plus, lhs, rhs, rhs_c, ratio, violations)


def theta_bound(u: Sequence[float] | float, h: float, n: int) -> float:
    """``2 n v_n |u| (2h)^(n-1)``, valid for ``|u| <= h``."""
    du = float(np.linalg.norm(np.atleast_1d(u)))
    if du > h:
        raise ValueError(f"|u| = {du:g} exceeds h = {h:g}")
    return 2 * n * unit_ball_volume(n) * du * (2 * h) ** (n - 1)


def theta_exact(u_len: float, h: float, n: int) -> float:
    """Measure of the annular shell ``B(x,|u|+h) minus B(x,h-|u|)``."""
    if u_len > h:
        raise ValueError(f"|u| = {u_len:g} exceeds h = {h:g}")
    v = unit_ball_volume(n)
    return v * (((u_len + h) ** n - h**n) + (h**n - (h - u_len) ** n))


def _theta_sets(x, u, h, domain):
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    du = float(np.linalg.norm(u))
    if du > h:
        raise ValueError(f"|u| = {du:g} exceeds h = {h:g}")
    outer = ball_indicator(x, du + h, domain)
    mid = ball_indicator(x, h, domain)
    if h - du > 0:
        inner = ball_indicator(x, h - du, domain)
        theta = (outer - mid) | (mid - inner)
    else:
        theta = (outer - mid) | mid
    shifted = ball_indicator(x + u, h, domain) if du > 0 else mid
    return theta, mid ^ shifted


def measured_theta(x, u, h: float, domain: GridDomain) -> float:
    """Grid measure of ``B(x,|u|+h) minus B(x,h)`` united with ``B(x,h) minus B(x,h-|u|)``."""
    return _theta_sets(x, u, h, domain)[0].measure


def measured_ball_difference(x, u, h: float, domain: GridDomain) -> float:
    """Grid measure of ``B(x+u, h)`` symmetric-difference ``B(x, h)``."""
    return _theta_sets(x, u, h, domain)[1].measure


def theta_grid_slack(u_len: float, h: float, domain: GridDomain) -> float:
    """Cell-count error allowance: total sphere area of the shell times the cell diagonal."""
    n = domain.dim
    area = lambda r: n * unit_ball_volume(n) * max(r, 0.0) ** (n - 1) if r > 0 else 0.0
    diag = float(np.linalg.norm(domain.spacing))
    return (area(h + u_len) + 2 * area(h) + area(h - u_len)) * diag


@dataclass(frozen=True)
class EquicontinuityEstimate:
    c_lip: float
    member: int
    point: int
    shift: tuple[int, ...]


def _half_shifts(domain: GridDomain, h: float) -> np.ndarray:
    offsets, lengths = _offset_grid(domain, h)
    keep = (lengths > 0) & (lengths <= h * (1 + 1e-12))
    offsets = offsets[keep]
    # one of each +/- pair
    first = np.array([tuple(o) > tuple(-o) for o in offsets], dtype=bool)
    return offsets[first]


def equicontinuity_modulus(members_hh: FunctionFamily | Sequence[GridFunction], h: float) -> EquicontinuityEstimate:
    """``max |g(x+u) - g(x)| / |u|`` over members, grid points and grid shifts ``0 < |u| <= h``.

    Only pairs with both ``x`` and ``x+u`` inside the box are sampled.
    """
    members = list(members_hh)
    domain = members[0].domain
    shifts = _half_shifts(domain, h)
    best = EquicontinuityEstimate(0.0, 0, 0, tuple(int(v) for v in shifts[0]) if len(shifts) else ())
    shape = domain.shape
    for mi, g in enumerate(members):
        grid = g.as_grid()
        for s in shifts:
            a = tuple(slice(max(0, -k), n - max(0, k)) for k, n in zip(s, shape))
            b = tuple(slice(max(0, k), n + min(0, k)) for k, n in zip(s, shape))
            diff = np.abs(grid[b] - grid[a])
            if diff.size == 0:
                continue
            length = float(np.linalg.norm(s * domain.spacing))
            j = int(np.argmax(diff))
            val = float(diff.flat[j]) / length
            if val > best.c_lip:
                local = np.unravel_index(j, diff.shape)
                point = int(np.ravel_multi_index(tuple(l + sl.start for l, sl in zip(local, a)), shape))
                best = EquicontinuityEstimate(val, mi, point, tuple(int(v) for v in s))
    return best


def lipschitz_bound(norm_bound: float, k: float, q_minus: float, h: float, n: int) -> float:
    """Lipschitz constant of doubly averaged members from the equicontinuity chain.

    ``|f_hh(x+u) - f_hh(x)| <= k M (v_n h^n)^(1/q_minus - 2) 2 n v_n (2h)^(n-1) |u|``.
    """
    vol = SteklovKernel(n, h).ball_volume
    inv_q = 0.0 if np.isinf(q_minus) else 1.0 / q_minus
    return k * norm_bound * vol ** (inv_q - 2.0) * 2 * n * unit_ball_volume(n) * (2 * h) ** (n - 1)
