"""End-to-end scenario pipeline: build, property suites, compactness, spectral step."""

from __future__ import annotations

import logging
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import compactness as cp
from .config import ScenarioConfig, build_family
from .exponent import decay_check, log_holder_check, parse_exponent
from .grid import GridFunction, ball_indicator, box_indicator
from .norms import (
    holder_check,
    ideal_check,
    indicator_norm_bounds,
    luxemburg_norm,
    modular,
)
from .report import CheckResult, RunReport, emit_csv, fmt
from .steklov import (
    SteklovKernel,
    mollifier_bound_check,
    parse_kernel,
    steklov_matrix,
    theta_bound,
    measured_ball_difference,
    measured_theta,
    theta_grid_slack,
    uniform_bound_check,
)

log = logging.getLogger(__name__)

STAGES = ("norms", "steklov", "compactness", "spectral")
UNIT_MODULAR_TOL = 1e-10
SPECTRAL_GAP_MIN = 1e-8
SOLVE_RESIDUAL_MAX = 1e-10


class _Timer:
    def __init__(self, timings: dict[str, float], name: str):
        self.timings, self.name = timings, name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.timings[self.name] = time.perf_counter() - self.t0


def _norm_suite(cfg, family, p) -> tuple[list[CheckResult], list[tuple[str, str]]]:
    checks: list[CheckResult] = []
    facts: list[tuple[str, str]] = []
    members = list(family)
    m = len(members)
    domain = family.domain

    for i in range(min(m, 8)):
        f, g = members[i], members[(i + 1) % m]
        r = holder_check(f, g, p)
        checks.append(CheckResult("holder", r.holds, r.lhs, r.rhs, f"k={fmt(r.k)} pair=({i},{(i + 1) % m})"))

    for i, f in enumerate(members[:8]):
        if f.is_zero():
            continue
        nr = luxemburg_norm(f, p)
        dev = abs(modular(f / nr.value, p) - 1.0)
        checks.append(CheckResult("unit_modular", dev <= UNIT_MODULAR_TOL, dev, UNIT_MODULAR_TOL,
                                  f"member={i} norm={fmt(nr.value)} iterations={nr.bisection_iterations}"))

    centre = 0.5 * (np.asarray(domain.lower) + np.asarray(domain.upper))
    span = float(np.min(np.asarray(domain.upper) - np.asarray(domain.lower)))
    sets = [("ball", ball_indicator(centre, 0.1 * span, domain)),
            ("ball", ball_indicator(centre, 0.3 * span, domain)),
            ("half", box_indicator(domain.lower, centre if domain.dim == 1 else
                                   (centre[0], domain.upper[1]), domain)),
            ("domain", box_indicator(domain.lower, np.asarray(domain.upper) + 1.0, domain))]
    for label, E in sets:
        if E.is_empty():
            continue
        b = indicator_norm_bounds(E, p)
        checks.append(CheckResult("indicator_bracket", b.holds, b.actual, b.upper,
                                  f"set={label} measure={fmt(b.measure)} lower={fmt(b.lower)}"))

    for i in range(min(m, 8)):
        f, g = members[i], members[(i + 1) % m]
        small = GridFunction(domain, np.minimum(np.abs(f.samples), np.abs(g.samples)))
        ok = ideal_check(small, f, p)
        checks.append(CheckResult("ideal", ok, luxemburg_norm(small, p).value, luxemburg_norm(f, p).value,
                                  f"min(|f{i}|,|f{(i + 1) % m}|) vs |f{i}|"))

    lh = log_holder_check(p)
    facts.append(("exponent.p_minus", fmt(p.p_minus)))
    facts.append(("exponent.p_plus", fmt(p.p_plus)))
    facts.append(("exponent.log_holder_constant", fmt(lh.constant)))
    facts.append(("exponent.log_holder_exhaustive", fmt(lh.exhaustive)))
    facts.append(("exponent.decay_constant", fmt(decay_check(p, 0.5 * (p.p_minus + p.p_plus)))))
    return checks, facts


def _steklov_suite(cfg, family, p) -> tuple[list[CheckResult], list[tuple[str, str]]]:
    checks: list[CheckResult] = []
    facts: list[tuple[str, str]] = []
    domain = family.domain
    n = domain.dim
    admissible = [h for h in cfg.h_schedule if SteklovKernel(n, h).ball_volume <= 1.0]

    for h in admissible[:3]:
        r = uniform_bound_check(family, h, p)
        checks.append(CheckResult("uniform_bound", r.holds, float(r.lhs.max()), r.rhs,
                                  f"h={fmt(h)} k={fmt(r.k)} M={fmt(r.norm_bound)} q_minus={fmt(r.q_minus)} "
                                  f"rhs_conservative={fmt(r.rhs_conservative)}"))

    centre = 0.5 * (np.asarray(domain.lower) + np.asarray(domain.upper))
    h = admissible[len(admissible) // 2] if admissible else cfg.h_schedule[-1]
    direction = np.ones(n) / np.sqrt(n)
    for frac in (0.25, 0.5, 1.0):
        u = frac * h * direction
        ul = float(np.linalg.norm(u))
        meas = measured_theta(centre, u, h, domain)
        bound = theta_bound(u, h, n) + theta_grid_slack(ul, h, domain)
        checks.append(CheckResult("theta", meas <= bound, meas, bound, f"h={fmt(h)} |u|={fmt(ul)}"))
        sym = measured_ball_difference(centre, u, h, domain)
        checks.append(CheckResult("shift_difference", sym <= meas + 1e-12, sym, meas, f"h={fmt(h)} |u|={fmt(ul)}"))

    nonzero = [f for f in family if not f.is_zero()]
    if nonzero:
        phi = parse_kernel(cfg.kernel, n)
        fam = cp.FunctionFamily(tuple(nonzero), family.label)
        mb = mollifier_bound_check(fam, phi, cfg.t_schedule, p)
        checks.append(CheckResult("mollifier_bound", mb.finite, mb.c_est, float("inf"),
                                  f"kernel={phi.name} scales={','.join(fmt(t) for t in mb.scales)}"))

    if admissible:
        a = cp.ascoli_diagnostics(family, h, p)
        checks.append(CheckResult("equi_sup", a.sup_double <= a.sup_bound + 1e-8, a.sup_double, a.sup_bound,
                                  f"h={fmt(h)} sup_h={fmt(a.sup_single)}"))
        checks.append(CheckResult("equi_lip", a.c_lip <= a.c_lip_bound + 1e-8, a.c_lip, a.c_lip_bound,
                                  f"h={fmt(h)}"))
    return checks, facts


def _spectral_suite(cfg, family, p) -> tuple[list[CheckResult], list[tuple[str, str]]]:
    checks: list[CheckResult] = []
    facts: list[tuple[str, str]] = []
    domain = family.domain
    h = cfg.spectral_h if cfg.spectral_h is not None else cfg.h_schedule[len(cfg.h_schedule) // 2]
    if domain.size > 4096:
        facts.append(("spectral.skipped", f"{domain.size} cells exceed the dense guard of 4096"))
        return checks, facts
    U = steklov_matrix(domain, h, normalization=cfg.normalization)
    s = cp.eigenvalue_one_check(U)
    checks.append(CheckResult("spectral_gap", s.min_gap > SPECTRAL_GAP_MIN, s.min_gap, SPECTRAL_GAP_MIN,
                              f"N={s.size} h={fmt(h)}"))
    checks.append(CheckResult("solve_residual", s.solve_residual <= SOLVE_RESIDUAL_MAX, s.solve_residual,
                              SOLVE_RESIDUAL_MAX, f"N={s.size} h={fmt(h)}"))
    facts.append(("spectral.resolvent_2norm", fmt(s.resolvent_estimate)))
    facts.append(("spectral.resolvent_supnorm", fmt(s.inverse_sup_norm)))
    facts.append(("spectral.max_row_sum", fmt(s.max_row_sum)))
    sud = cp.sudakov_bound_check(family, h, p, normalization=cfg.normalization, seed=cfg.seed)
    worst = int(np.argmax(sud.member_norms))
    checks.append(CheckResult("resolvent_bound", sud.holds, float(sud.member_norms[worst]),
                              sud.k_input * sud.resolvent_estimate,
                              f"h={fmt(h)} K={fmt(sud.k_input)} resolvent_estimate={fmt(sud.resolvent_estimate)} "
                              f"resolvent_supnorm={fmt(sud.resolvent_sup_norm)}"))
    return checks, facts


def run_scenario(cfg: ScenarioConfig, stages: tuple[str, ...] = STAGES) -> RunReport:
    """Run the selected pipeline stages; never raises on a failed inequality."""
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise ValueError(f"unknown stages: {sorted(unknown)}")
    cfg.validate()
    report = RunReport(cfg.as_items(), generated_at=datetime.now(timezone.utc).isoformat(timespec="seconds"))
    with _Timer(report.timings, "build"):
        domain = cfg.domain()
        p = parse_exponent(cfg.exponent, domain)
        family = build_family(cfg)
    report.facts.append(("family.members", str(len(family))))
    report.facts.append(("family.norm_bound", fmt(family.norm_bound(p))))
    suites = (("norms", _norm_suite), ("steklov", _steklov_suite), ("spectral", _spectral_suite))
    for name, suite in suites:
        if name not in stages:
            continue
        with _Timer(report.timings, name):
            checks, facts = suite(cfg, family, p)
        report.checks += checks
        report.facts += facts
    if "compactness" in stages:
        with _Timer(report.timings, "compactness"):
            report.compactness = cp.criterion_verdict(
                family, cfg.h_schedule, cfg.eps_schedule, p, cfg.thresholds,
                normalization=cfg.normalization)
    return report


def write_outputs(report: RunReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.txt"]
    report.write(written[0])
    if report.compactness is not None:
        emit_csv(report.compactness.d_profile, ("h", "D"), out / "d_profile.csv")
        emit_csv(report.compactness.net_profile, ("eps", "net_size"), out / "net_profile.csv")
        written += [out / "d_profile.csv", out / "net_profile.csv"]
    return written
