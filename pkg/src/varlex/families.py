"""Finite sampled function families and the named generators that build them."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterator, Sequence

import numpy as np

from .exponent import ExponentField
from .grid import GridDomain, GridFunction
from .norms import batch_norms


@dataclass(frozen=True, eq=False)
class FunctionFamily:
    """A finite family of grid functions on one domain.

    ``generator`` is the preset string that produced the family (if any); it is
    what :meth:`enrich` re-runs with a larger size.
    """

    members: tuple[GridFunction, ...]
    label: str = "family"
    generator: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        members = tuple(self.members)
        if not members:
            raise ValueError("a function family needs at least one member")
        domain = members[0].domain
        if any(f.domain != domain for f in members):
            raise ValueError("all family members must share one domain")
        object.__setattr__(self, "members", members)

    @property
    def domain(self) -> GridDomain:
        return self.members[0].domain

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[GridFunction]:
        return iter(self.members)

    def __getitem__(self, i: int) -> GridFunction:
        return self.members[i]

    def stack(self) -> np.ndarray:
        return np.stack([f.samples for f in self.members])

    def norms(self, p: ExponentField) -> np.ndarray:
        return batch_norms(self.stack(), p)

    def norm_bound(self, p: ExponentField) -> float:
        """M = max member norm."""
        return float(self.norms(p).max())

    def map(self, fn: Callable[[GridFunction], GridFunction], label: str | None = None) -> "FunctionFamily":
        return FunctionFamily(tuple(fn(f) for f in self.members), label or self.label)

    def permuted(self, order: Sequence[int]) -> "FunctionFamily":
        order = list(order)
        if sorted(order) != list(range(len(self))):
            raise ValueError("order must be a permutation of member indices")
        return replace(self, members=tuple(self.members[i] for i in order))

    def enrich(self, factor: int) -> "FunctionFamily":
        """Same generator, ``factor`` times as many members.  Fixed families return themselves."""
        if self.generator is None or factor == 1:
            return self
        name, size, seed = _parse_generator(self.generator, self.seed)
        return make_family(_format_generator(name, size * factor, seed), self.domain, seed=self.seed)


def _unit(domain: GridDomain) -> np.ndarray:
    """First coordinate rescaled to [0, 1]."""
    lo, hi = domain.lower[0], domain.upper[0]
    return (domain.centers[:, 0] - lo) / (hi - lo)


def _constants(domain: GridDomain, m: int, seed: int) -> list[np.ndarray]:
    return [np.full(domain.size, c) for c in np.linspace(0.25, 2.0, m)]


def _translates(domain: GridDomain, m: int, seed: int) -> list[np.ndarray]:
    s = _unit(domain)
    starts = np.linspace(0.0, 0.75, m)
    return [((s >= a) & (s < a + 0.25)).astype(float) for a in starts]


def _oscillations(domain: GridDomain, m: int, seed: int) -> list[np.ndarray]:
    s = _unit(domain)
    return [np.sin(2 * np.pi * k * s) for k in range(1, m + 1)]


def _lipschitz_bumps(domain: GridDomain, m: int, seed: int) -> list[np.ndarray]:
    # tents of slope 4 and radius 1/4, centred so the support stays inside the box
    pts = domain.centers
    mid = 0.5 * (np.asarray(domain.lower) + np.asarray(domain.upper))
    lo, hi = domain.lower[0] + 0.25, domain.upper[0] - 0.25
    if lo > hi:
        lo = hi = mid[0]
    out = []
    for a in np.linspace(lo, hi, m):
        c = mid.copy()
        c[0] = a
        out.append(np.maximum(0.0, 1.0 - 4.0 * np.linalg.norm(pts - c, axis=1)))
    return out


def _random_smooth(domain: GridDomain, m: int, seed: int) -> list[np.ndarray]:
    lower = np.asarray(domain.lower)
    span = np.asarray(domain.upper) - lower
    s = (domain.centers - lower) / span
    out = []
    for i in range(m):
        rng = np.random.default_rng([seed, i])
        terms = 8
        freqs = rng.integers(-4, 5, size=(terms, domain.dim))
        amps = rng.normal(size=terms) / (1.0 + np.sum(freqs**2, axis=1))
        phases = rng.uniform(0, 2 * np.pi, size=terms)
        out.append(np.cos(2 * np.pi * s @ freqs.T + phases) @ amps)
    return out


GENERATORS: dict[str, tuple[Callable[[GridDomain, int, int], list[np.ndarray]], int, str]] = {
    "constants": (_constants, 8, "constants:<m> - c*1 for m values of c in [0.25, 2]"),
    "translates": (_translates, 64, "translates:<m> - indicators of [a, a+1/4] (unit-rescaled x1), a in [0, 3/4]"),
    "oscillations": (_oscillations, 8, "oscillations:<K> - sin(2*pi*k*x1), k = 1..K"),
    "lipschitz-bumps": (_lipschitz_bumps, 16, "lipschitz-bumps:<m> - tents max(0, 1 - 4|x - a|), supports inside the box"),
    "random-smooth": (_random_smooth, 20, "random-smooth:<m>,<seed> - seeded random trigonometric sums"),
}


def _parse_generator(spec: str, seed: int = 0) -> tuple[str, int, int]:
    name, _, args = spec.strip().partition(":")
    name = name.strip().lower()
    if name not in GENERATORS:
        raise ValueError(f"unknown family generator {spec!r}; known: {', '.join(GENERATORS)}")
    _, default, _ = GENERATORS[name]
    parts = [a.strip() for a in args.split(",") if a.strip()]
    try:
        size = int(parts[0]) if parts else default
        if len(parts) > 1:
            if name != "random-smooth":
                raise ValueError
            seed = int(parts[1])
        if len(parts) > 2:
            raise ValueError
    except ValueError:
        raise ValueError(f"bad parameters for family generator {spec!r}") from None
    if size < 1:
        raise ValueError(f"family size must be positive in {spec!r}")
    return name, size, seed


def _format_generator(name: str, size: int, seed: int) -> str:
    return f"{name}:{size},{seed}" if name == "random-smooth" else f"{name}:{size}"


def make_family(spec: str, domain: GridDomain, seed: int = 0) -> FunctionFamily:
    """Build a family from a generator string such as ``"oscillations:32"``."""
    name, size, seed = _parse_generator(spec, seed)
    build, _, _ = GENERATORS[name]
    members = tuple(GridFunction(domain, v) for v in build(domain, size, seed))
    canonical = _format_generator(name, size, seed)
    return FunctionFamily(members, label=canonical, generator=canonical, seed=seed)
