"""CSV profiles and the plain-text run report."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .compactness import CompactnessReport


def fmt(x) -> str:
    """Locale-free decimal with 12 significant digits; integers verbatim."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.12g}"


def emit_csv(rows: Iterable[Sequence], header: Sequence[str], path: str | Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    try:
        Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror or exc}") from exc


def read_csv(path: str | Path) -> tuple[list[str], list[tuple]]:
    """Inverse of :func:`emit_csv`; integer-looking cells come back as ``int``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for row in reader:
            rows.append(tuple(int(c) if c.lstrip("-").isdigit() else float(c) for c in row))
    return header, rows


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    lhs: float
    rhs: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" {self.detail}" if self.detail else ""
        return f"{status} lhs={fmt(self.lhs)} rhs={fmt(self.rhs)}{extra}"


@dataclass
class RunReport:
    config_items: list[tuple[str, str]]
    checks: list[CheckResult] = field(default_factory=list)
    compactness: CompactnessReport | None = None
    facts: list[tuple[str, str]] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    generated_at: str = ""

    @property
    def failed(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def render(self) -> str:
        lines = ["# varlex run report"]
        timing = ",".join(f"{k}:{v:.3f}s" for k, v in self.timings.items())
        # the only run-dependent line
        lines.append(f"run_info = generated_at={self.generated_at}; timing={timing}")
        lines += [f"config.{k} = {v}" for k, v in self.config_items]
        counters: dict[str, int] = {}
        for c in self.checks:
            i = counters.get(c.name, 0)
            counters[c.name] = i + 1
            lines.append(f"check.{c.name}[{i}] = {c.line()}")
        lines += [f"{k} = {v}" for k, v in self.facts]
        comp = self.compactness
        if comp is not None:
            lines.append(f"compactness.verdict = {comp.verdict.value}")
            lines.append(f"compactness.note = {comp.note}")
            lines.append(f"compactness.median_norm = {fmt(comp.median_norm)}")
            for i, r in enumerate(comp.reasons):
                lines.append(f"compactness.reason[{i}] = {r}")
            for i, (h, d) in enumerate(comp.d_profile):
                lines.append(f"compactness.d_profile[{i}] = h={fmt(h)} D={fmt(d)}")
            for i, (members, prof) in enumerate(comp.enrichment):
                sizes = " ".join(f"eps={fmt(e)}:{s}" for e, s in prof)
                lines.append(f"compactness.nets[{i}] = members={members} {sizes}")
            if comp.ascoli is not None:
                a = comp.ascoli
                lines.append(
                    f"compactness.ascoli = h={fmt(a.h)} sup_h={fmt(a.sup_single)} sup_hh={fmt(a.sup_double)} "
                    f"sup_bound={fmt(a.sup_bound)} c_lip={fmt(a.c_lip)} c_lip_bound={fmt(a.c_lip_bound)} "
                    f"theta_consistency={fmt(a.theta_consistency)} net={a.net_size} net_hh={a.hh_net_size}"
                )
            if comp.spectral is not None:
                s = comp.spectral
                lines.append(
                    f"compactness.spectral = N={s.size} h={fmt(s.radius)} min_gap={fmt(s.min_gap)} "
                    f"resolvent_2norm={fmt(s.resolvent_estimate)} resolvent_supnorm={fmt(s.inverse_sup_norm)}"
                )
        lines.append(f"summary.checks = {len(self.checks)}")
        lines.append(f"summary.failed = {len(self.failed)}")
        for c in self.failed:
            lines.append(f"summary.witness = {c.name}: {c.line()}")
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.render(), encoding="utf-8", newline="")
