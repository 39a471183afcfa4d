"""Empirical compactness analysis of sampled families in L^{p(.)}.

Two profiles drive the verdict: the uniform Steklov deviation
``D(h) = max_f ||f_h - f||`` and the size of greedy internal epsilon-nets as
the family is enriched.  Supporting diagnostics cover the doubly averaged
family (uniform bound and Lipschitz modulus) and invertibility of
``U - I`` for the discretised Steklov operator U.

All Steklov operators here use discrete-mass normalisation by default, so
constants are reproduced exactly in the interior and boundary rows sum to
less than one.
"""

from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .exponent import ExponentField, dual_exponent
from .families import FunctionFamily
from .norms import INEQ_SLACK, batch_norms, holder_constant
from .steklov import (
    SteklovKernel,
    SteklovMatrix,
    equicontinuity_modulus,
    lipschitz_bound,
    measured_ball_difference,
    measured_theta,
    steklov_matrix,
    steklov_stencil,
    theta_bound,
    theta_grid_slack,
)

log = logging.getLogger(__name__)

DEFAULT_NORMALIZATION = "discrete"
EXACT_NET_LIMIT = 12  # families up to this size get an exhaustively minimal net
SINGULAR_TOL = 1e-12


class FalsificationError(RuntimeError):
    """A numerical outcome that the theory rules out."""


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("VARLEX_THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# distances and nets


def pairwise_distances(family: FunctionFamily, p: ExponentField) -> np.ndarray:
    """Symmetric matrix of ``||f_i - f_j||``."""
    X = family.stack()
    m = X.shape[0]
    iu, ju = np.triu_indices(m, k=1)
    D = np.zeros((m, m))
    if iu.size == 0:
        return D
    chunks = np.array_split(np.arange(iu.size), max(1, iu.size // 512))

    def work(idx: np.ndarray) -> np.ndarray:
        return batch_norms(X[iu[idx]] - X[ju[idx]], p)

    threads = worker_count()
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    vals = np.concatenate(parts)
    D[iu, ju] = vals
    D[ju, iu] = vals
    return D


def greedy_net_from_distances(D: np.ndarray, eps: float) -> list[int]:
    """Farthest-point traversal seeded at member 0; ties go to the lowest index."""
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    m = D.shape[0]
    if m == 0:
        return []
    net = [0]
    nearest = D[0].copy()
    while True:
        j = int(np.argmax(nearest))  # argmax returns the first maximiser
        if nearest[j] <= eps:
            return net
        net.append(j)
        nearest = np.minimum(nearest, D[j])


def epsilon_net_from_distances(D: np.ndarray, eps: float) -> list[int]:
    """Farthest-point net, replaced by a smaller cover when one exists on tiny families.

    Farthest-point traversal can overshoot the minimum badly when the seed sits
    at the rim of a cluster that one central member covers.  For at most
    ``EXACT_NET_LIMIT`` members the lexicographically first minimum cover is
    found by enumeration instead.
    """
    net = greedy_net_from_distances(D, eps)
    m = D.shape[0]
    if m > EXACT_NET_LIMIT or len(net) <= 1:
        return net
    covers = D <= eps
    for k in range(1, len(net)):
        for subset in itertools.combinations(range(m), k):
            if covers[list(subset)].any(axis=0).all():
                return list(subset)
    return net


def greedy_epsilon_net(family: FunctionFamily, eps: float, p: ExponentField,
                       distances: np.ndarray | None = None) -> list[int]:
    """Indices of an internal epsilon-net: every member is within eps of one of them."""
    if distances is None:
        distances = pairwise_distances(family, p)
    return epsilon_net_from_distances(distances, eps)


def total_boundedness_profile(family: FunctionFamily, eps_schedule: Sequence[float],
                              p: ExponentField, distances: np.ndarray | None = None) -> list[tuple[float, int]]:
    _check_decreasing(eps_schedule, "eps_schedule")
    if distances is None:
        distances = pairwise_distances(family, p)
    return [(float(e), len(epsilon_net_from_distances(distances, e))) for e in eps_schedule]


def _check_decreasing(values: Sequence[float], name: str) -> None:
    vals = list(values)
    if any(not v > 0 for v in vals):
        raise ValueError(f"{name} must be positive")
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise ValueError(f"{name} must be strictly decreasing")


# --------------------------------------------------------------------------
# Steklov deviation


@dataclass(frozen=True)
class DeviationProfile:
    h: tuple[float, ...]
    D: tuple[float, ...]
    per_member: np.ndarray = field(repr=False)  # (len(h), members)

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.h, self.D))


def steklov_deviation(family: FunctionFamily, h_schedule: Sequence[float], p: ExponentField, *,
                      normalization: str = DEFAULT_NORMALIZATION) -> DeviationProfile:
    """``D(h) = max_f ||f_h - f||`` along a strictly decreasing h schedule."""
    h_schedule = [float(h) for h in h_schedule]
    if not h_schedule:
        return DeviationProfile((), (), np.zeros((0, len(family))))
    _check_decreasing(h_schedule, "h_schedule")
    X = family.stack()
    per = np.empty((len(h_schedule), len(family)))
    for i, h in enumerate(h_schedule):
        st = steklov_stencil(family.domain, h, normalization=normalization)
        smoothed = np.stack([st.apply_samples(row) for row in X])
        per[i] = batch_norms(smoothed - X, p)
    return DeviationProfile(tuple(h_schedule), tuple(float(v) for v in per.max(axis=1)), per)


# --------------------------------------------------------------------------
# doubly averaged family


@dataclass(frozen=True)
class AscoliDiagnostics:
    h: float
    sup_single: float          # sup over F_h
    sup_double: float          # sup over F_hh
    sup_bound: float           # k M (v_n h^n)^(1/q_minus - 1)
    c_lip: float
    c_lip_bound: float
    theta_consistency: bool
    net_size: int | None = None     # epsilon-net size of F at eps
    hh_net_size: int | None = None  # epsilon-net size of F_hh at eps
    eps: float | None = None

    @property
    def holds(self) -> bool:
        return (self.sup_single <= self.sup_bound + INEQ_SLACK
                and self.sup_double <= self.sup_bound + INEQ_SLACK
                and self.c_lip <= self.c_lip_bound + INEQ_SLACK
                and self.theta_consistency)


def _theta_chain_ok(domain, h: float, samples: int = 6) -> bool:
    """Sampled ``|Omega(x,u,h)| <= |Theta(x,u,h)| <= bound + grid slack`` at the box centre."""
    x = 0.5 * (np.asarray(domain.lower) + np.asarray(domain.upper))
    direction = np.ones(domain.dim) / np.sqrt(domain.dim)
    for frac in np.linspace(0.0, 1.0, samples):
        u = frac * h * direction
        ul = float(np.linalg.norm(u))
        th = measured_theta(x, u, h, domain)
        om = measured_ball_difference(x, u, h, domain)
        slack = theta_grid_slack(ul, h, domain)
        if om > th + 1e-12 or th > theta_bound(u, h, domain.dim) + slack:
            return False
    return True


def ascoli_diagnostics(family: FunctionFamily, h: float, p: ExponentField, *,
                       eps: float | None = None,
                       normalization: str = "continuum") -> AscoliDiagnostics:
    """Uniform bound and equicontinuity of ``F_hh``, the twice-averaged family."""
    kernel = SteklovKernel(family.domain.dim, h)
    vol = kernel.ball_volume
    if vol > 1.0:
        raise ValueError(f"v_n h^n = {vol:.6g} > 1; the uniform bound needs v_n h^n <= 1")
    q = dual_exponent(p)
    k = holder_constant(p)
    M = family.norm_bound(p)
    st = steklov_stencil(family.domain, h, normalization=normalization)
    fam_h = family.map(st.apply, label=f"{family.label}_h")
    fam_hh = fam_h.map(st.apply, label=f"{family.label}_hh")
    inv_q = 0.0 if np.isinf(q.q_minus) else 1.0 / q.q_minus
    sup_bound = k * M * vol ** (inv_q - 1.0)
    eq = equicontinuity_modulus(fam_hh, h)
    c_bound = lipschitz_bound(M, k, q.q_minus, h, family.domain.dim)
    net = hh_net = None
    if eps is not None:
        net = len(greedy_epsilon_net(family, eps, p))
        hh_net = len(greedy_epsilon_net(fam_hh, eps, p))
    return AscoliDiagnostics(
        h=h,
        sup_single=max(f.sup() for f in fam_h),
        sup_double=max(f.sup() for f in fam_hh),
        sup_bound=sup_bound,
        c_lip=eq.c_lip,
        c_lip_bound=c_bound,
        theta_consistency=_theta_chain_ok(family.domain, h),
        net_size=net,
        hh_net_size=hh_net,
        eps=eps,
    )


# --------------------------------------------------------------------------
# spectral step


@dataclass(frozen=True)
class SpectralCheck:
    size: int
    radius: float
    min_gap: float
    resolvent_estimate: float   # 1 / sigma_min(U - I), the 2-norm of the inverse
    probe_estimate: float       # max column 2-norm over coordinate probes
    inverse_sup_norm: float     # infinity-norm of (U - I)^-1 from the LU factors
    solve_residual: float
    max_row_sum: float

    @property
    def invertible(self) -> bool:
        return self.min_gap > SINGULAR_TOL and np.isfinite(self.resolvent_estimate)


def eigenvalue_one_check(U: SteklovMatrix, probes: int = 64) -> SpectralCheck:
    """Distance of the spectrum of U to 1, and size of ``(U - I)^-1``."""
    A = np.array(U.matrix, dtype=float)
    n = A.shape[0]
    if np.array_equal(A, A.T):
        eig = sla.eigvalsh(A)
    else:
        eig = sla.eigvals(A)
    min_gap = float(np.min(np.abs(eig - 1.0)))
    B = A - np.eye(n)
    sigma = sla.svdvals(B)
    if min_gap <= SINGULAR_TOL or sigma[-1] <= SINGULAR_TOL:
        raise FalsificationError(
            f"U - I is singular for N={n}, h={U.radius:g}: min |lambda - 1| = {min_gap:.3e}, "
            f"sigma_min = {sigma[-1]:.3e}"
        )
    lu = sla.lu_factor(B, check_finite=True)
    inv = sla.lu_solve(lu, np.eye(n))
    cols = np.unique(np.linspace(0, n - 1, min(n, probes)).astype(int))
    E = np.eye(n)[:, cols]
    X = sla.lu_solve(lu, E)
    residual = float(np.max(np.abs(B @ X - E)))
    residual = max(residual, float(np.max(np.abs(B @ inv - np.eye(n)))))
    return SpectralCheck(
        size=n,
        radius=U.radius,
        min_gap=min_gap,
        resolvent_estimate=float(1.0 / sigma[-1]),
        probe_estimate=float(np.max(np.linalg.norm(X, axis=0))),
        inverse_sup_norm=float(np.max(np.sum(np.abs(inv), axis=1))),
        solve_residual=residual,
        max_row_sum=float(U.row_sums().max()),
    )


@dataclass(frozen=True)
class SudakovReport:
    h: float
    k_input: float
    resolvent_estimate: float       # probe estimate of the L^{p(.)} operator norm
    resolvent_sup_norm: float       # exact infinity-norm, for comparison
    member_norms: np.ndarray = field(repr=False)
    member_deviations: np.ndarray = field(repr=False)
    worst_ratio: float              # max ||f|| / (K * estimate)
    violations: int

    @property
    def holds(self) -> bool:
        return self.violations == 0


def resolvent_pnorm_estimate(U: SteklovMatrix, p: ExponentField, *, random_probes: int = 50,
                             coordinate_probes: int = 256, eigen_probes: int = 4,
                             refine_steps: int = 20, seed: int = 0) -> float:
    """Lower-bound witness for ``||(U - I)^-1||`` on L^{p(.)} by probe maximisation.

    Probes: seeded Gaussian vectors, coordinate vectors, and the eigenvectors of
    U nearest to 1; the best probe is then pushed through a few rounds of
    inverse iteration.
    """
    A = np.asarray(U.matrix)
    n = A.shape[0]
    B = A - np.eye(n)
    lu = sla.lu_factor(B)
    rng = np.random.default_rng(seed)
    probes = [rng.normal(size=(random_probes, n))]
    cols = np.unique(np.linspace(0, n - 1, min(n, coordinate_probes)).astype(int))
    probes.append(np.eye(n)[cols])
    if eigen_probes > 0:
        if np.array_equal(A, A.T):
            w, V = np.linalg.eigh(A)
        else:
            w, V = np.linalg.eig(A)
            w, V = w.real, V.real
        order = np.argsort(np.abs(w - 1.0))[:eigen_probes]
        probes.append(V[:, order].T)
    G = np.concatenate(probes)
    X = sla.lu_solve(lu, G.T).T
    ratios = batch_norms(X, p) / batch_norms(G, p)
    best = float(ratios.max())
    g = G[int(np.argmax(ratios))]
    for _ in range(refine_steps):
        x = sla.lu_solve(lu, g)
        nx = batch_norms(x[None, :], p)[0]
        ng = batch_norms(g[None, :], p)[0]
        best = max(best, float(nx / ng))
        g = x / nx
    return best


def sudakov_bound_check(family: FunctionFamily, h: float, p: ExponentField, *,
                        k_input: float | None = None, normalization: str = DEFAULT_NORMALIZATION,
                        seed: int = 0, slack: float = INEQ_SLACK) -> SudakovReport:
    """Check ``||f|| <= K ||(U - I)^-1||`` given ``||U f - f|| <= K`` for every member.

    Without ``k_input``, K is the measured deviation ``D(h)``.
    """
    U = steklov_matrix(family.domain, h, normalization=normalization)
    X = family.stack()
    deviations = batch_norms(X @ U.matrix.T - X, p)
    norms = batch_norms(X, p)
    K = float(deviations.max()) if k_input is None else float(k_input)
    bad = np.flatnonzero(deviations > K * (1 + 1e-12))
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"member {i} has ||U f - f|| = {deviations[i]:.6g} > K = {K:.6g}; precondition violated"
        )
    est = resolvent_pnorm_estimate(U, p, seed=seed)
    B = U.matrix - np.eye(U.size)
    sup_norm = float(np.max(np.sum(np.abs(np.linalg.inv(B)), axis=1)))
    rhs = K * est
    ratio = float(np.max(norms) / rhs) if rhs > 0 else (0.0 if not norms.any() else np.inf)
    violations = int(np.count_nonzero(norms > rhs + slack))
    return SudakovReport(h, K, est, sup_norm, norms, deviations, ratio, violations)


# --------------------------------------------------------------------------
# verdict


class Verdict(str, Enum):
    COMPACT_CONSISTENT = "COMPACT_CONSISTENT"
    NOT_COMPACT = "NOT_COMPACT"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Thresholds:
    tau_d: float = 0.05                 # x median member norm
    tau_sat: float = 0.5                # x median member norm
    enrichment_factor: int = 2
    enrichment_rounds: int = 3          # families compared, base included
    stable_ratio: float = 1.25          # last size <= ratio * previous + slack
    stable_slack: int = 1
    growth_ratio: float = 1.75          # every round grows by at least this factor


EVIDENCE_NOTE = (
    "COMPACT_CONSISTENT is evidence from finite sampling, not a proof of compactness; "
    "NOT_COMPACT is backed by a witness (saturated D(h) or growing nets)."
)


@dataclass(frozen=True)
class CompactnessReport:
    d_profile: list[tuple[float, float]]
    net_profile: list[tuple[float, int]]
    enrichment: list[tuple[int, list[tuple[float, int]]]]   # (members, net profile) per round
    median_norm: float
    verdict: Verdict
    reasons: list[str]
    ascoli: AscoliDiagnostics | None = None
    spectral: SpectralCheck | None = None
    note: str = EVIDENCE_NOTE


def _nets_stable(rounds: list[list[tuple[float, int]]], th: Thresholds) -> bool:
    if len(rounds) < 2:
        return True
    prev, last = rounds[-2], rounds[-1]
    return all(b <= th.stable_ratio * a + th.stable_slack for (_, a), (_, b) in zip(prev, last))


def _nets_growing(rounds: list[list[tuple[float, int]]], th: Thresholds) -> bool:
    if len(rounds) < 2:
        return False
    for j in range(len(rounds[0])):
        sizes = [r[j][1] for r in rounds]
        if sizes[0] >= 2 and all(b >= th.growth_ratio * a for a, b in zip(sizes, sizes[1:])):
            return True
    return False


def criterion_verdict(family: FunctionFamily, h_schedule: Sequence[float],
                      eps_schedule: Sequence[float], p: ExponentField,
                      thresholds: Thresholds | None = None, *,
                      normalization: str = DEFAULT_NORMALIZATION,
                      diagnostics: bool = True) -> CompactnessReport:
    """Uniform Steklov approximation plus net stability, read as a compactness verdict."""
    th = thresholds or Thresholds()
    _check_decreasing(h_schedule, "h_schedule")
    _check_decreasing(eps_schedule, "eps_schedule")
    dev = steklov_deviation(family, h_schedule, p, normalization=normalization)
    norms = family.norms(p)
    median = float(np.median(norms))

    rounds: list[tuple[int, list[tuple[float, int]]]] = []
    fam = family
    for r in range(th.enrichment_rounds):
        if r > 0:
            fam = family.enrich(th.enrichment_factor**r)
        rounds.append((len(fam), total_boundedness_profile(fam, eps_schedule, p)))
    profiles = [prof for _, prof in rounds]

    reasons: list[str] = []
    if median == 0:
        verdict = Verdict.COMPACT_CONSISTENT
        reasons.append("all members vanish")
    else:
        d_final = dev.D[-1]
        saturated = d_final >= th.tau_sat * median
        growing = _nets_growing(profiles, th)
        stable = _nets_stable(profiles, th)
        if saturated:
            reasons.append(f"D(h={dev.h[-1]:g}) = {d_final:.6g} >= tau_sat * median norm = {th.tau_sat * median:.6g}")
        if growing:
            reasons.append("net sizes grow with enrichment: " + "; ".join(
                f"{m} members -> {[s for _, s in prof]}" for m, prof in rounds))
        if saturated or growing:
            verdict = Verdict.NOT_COMPACT
        elif d_final < th.tau_d * median and stable:
            verdict = Verdict.COMPACT_CONSISTENT
            reasons.append(f"D(h={dev.h[-1]:g}) = {d_final:.6g} < tau_d * median norm = {th.tau_d * median:.6g}")
            reasons.append("net sizes stable under enrichment")
        else:
            verdict = Verdict.INCONCLUSIVE
            reasons.append(f"D(h={dev.h[-1]:g}) = {d_final:.6g} between thresholds or nets not yet stable")

    ascoli = spectral = None
    if diagnostics:
        admissible = [h for h in h_schedule if SteklovKernel(family.domain.dim, h).ball_volume <= 1.0]
        if admissible:
            h_diag = admissible[len(admissible) // 2]
            ascoli = ascoli_diagnostics(family, h_diag, p, eps=float(eps_schedule[-1]))
            if family.domain.size <= 4096:
                spectral = eigenvalue_one_check(
                    steklov_matrix(family.domain, h_diag, normalization=normalization))
    return CompactnessReport(dev.pairs(), profiles[0], [(m, prof) for m, prof in rounds], median,
                             verdict, reasons, ascoli, spectral)
