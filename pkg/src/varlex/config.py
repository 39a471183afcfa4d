"""Scenario configuration: flat ``key = value`` text with dotted section names.

Example::

    name = compact-demo
    domain.lower = 0
    domain.upper = 1
    domain.cells = 512
    exponent = affine:1.5,1
    family = lipschitz-bumps:16
    schedule.h = 0.2, 0.1, 0.05
    schedule.eps = 0.4, 0.2, 0.1
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .compactness import Thresholds
from .exponent import parse_exponent
from .families import _parse_generator, make_family
from .grid import GridDomain
from .steklov import NORMALIZATIONS, parse_kernel


class ConfigError(ValueError):
    def __init__(self, field_path: str, message: str):
        self.field = field_path
        label = FIELD_LABELS.get(field_path)
        where = f"{field_path} ({label})" if label else field_path
        super().__init__(f"{where}: {message}")


FIELD_LABELS = {
    "schedule.h": "h_schedule",
    "schedule.eps": "ε_schedule",
    "schedule.t": "t_schedule",
}

KEYS = (
    "name", "domain.dim", "domain.lower", "domain.upper", "domain.cells",
    "exponent", "kernel", "family", "seed",
    "schedule.h", "schedule.eps", "schedule.t",
    "thresholds.tau_d", "thresholds.tau_sat",
    "thresholds.enrichment_factor", "thresholds.enrichment_rounds",
    "steklov.normalization", "spectral.h", "output.dir",
)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "custom"
    lower: tuple[float, ...] = (0.0,)
    upper: tuple[float, ...] = (1.0,)
    cells: tuple[int, ...] = (512,)
    exponent: str = "const:2"
    kernel: str = "ball"
    family: str = "random-smooth:20"
    seed: int = 0
    h_schedule: tuple[float, ...] = (0.2, 0.1, 0.05)
    eps_schedule: tuple[float, ...] = (0.4, 0.2, 0.1)
    t_schedule: tuple[float, ...] = (0.2, 0.1, 0.05)
    thresholds: Thresholds = field(default_factory=Thresholds)
    normalization: str = "discrete"
    spectral_h: float | None = None
    out_dir: str = "out"

    @property
    def dim(self) -> int:
        return len(self.cells)

    def domain(self) -> GridDomain:
        return GridDomain(self.lower, self.upper, self.cells)

    def with_overrides(self, *, cells: int | None = None, seed: int | None = None,
                       out_dir: str | None = None) -> "ScenarioConfig":
        cfg = self
        if cells is not None:
            cfg = replace(cfg, cells=(int(cells),) * cfg.dim)
        if seed is not None:
            fam = cfg.family
            name, size, _ = _parse_generator(fam)
            if name == "random-smooth":
                fam = f"{name}:{size},{int(seed)}"
            cfg = replace(cfg, seed=int(seed), family=fam)
        if out_dir is not None:
            cfg = replace(cfg, out_dir=out_dir)
        cfg.validate()
        return cfg

    def as_items(self) -> list[tuple[str, str]]:
        """Canonical key/value pairs, in declaration order."""
        fmt = lambda xs: ", ".join(f"{x:.12g}" if isinstance(x, float) else str(x) for x in xs)
        th = self.thresholds
        items = [
            ("name", self.name),
            ("domain.dim", str(self.dim)),
            ("domain.lower", fmt(self.lower)),
            ("domain.upper", fmt(self.upper)),
            ("domain.cells", fmt(self.cells)),
            ("exponent", self.exponent),
            ("kernel", self.kernel),
            ("family", self.family),
            ("seed", str(self.seed)),
            ("schedule.h", fmt(self.h_schedule)),
            ("schedule.eps", fmt(self.eps_schedule)),
            ("schedule.t", fmt(self.t_schedule)),
            ("thresholds.tau_d", f"{th.tau_d:.12g}"),
            ("thresholds.tau_sat", f"{th.tau_sat:.12g}"),
            ("thresholds.enrichment_factor", str(th.enrichment_factor)),
            ("thresholds.enrichment_rounds", str(th.enrichment_rounds)),
            ("steklov.normalization", self.normalization),
        ]
        if self.spectral_h is not None:
            items.append(("spectral.h", f"{self.spectral_h:.12g}"))
        items.append(("output.dir", self.out_dir))
        return items

    def validate(self) -> None:
        if not (len(self.lower) == len(self.upper) == len(self.cells)):
            raise ConfigError("domain", "lower, upper and cells must have the same number of axes")
        try:
            domain = self.domain()
        except ValueError as exc:
            raise ConfigError("domain", str(exc)) from None
        for key, values in (("schedule.h", self.h_schedule), ("schedule.eps", self.eps_schedule),
                            ("schedule.t", self.t_schedule)):
            if not values:
                raise ConfigError(key, "must not be empty")
            if any(not v > 0 for v in values):
                raise ConfigError(key, "values must be positive")
            if any(b >= a for a, b in zip(values, values[1:])):
                raise ConfigError(key, "must be strictly decreasing")
        finest = min(self.h_schedule)
        if finest < 2 * domain.max_spacing:
            raise ConfigError("schedule.h", f"h = {finest:g} is below 2 x grid spacing {domain.max_spacing:g}")
        for key, builder in (("exponent", lambda: parse_exponent(self.exponent, domain)),
                             ("kernel", lambda: parse_kernel(self.kernel, self.dim)),
                             ("family", lambda: _parse_generator(self.family, self.seed))):
            try:
                builder()
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError("steklov.normalization", f"must be one of {', '.join(NORMALIZATIONS)}")
        th = self.thresholds
        if not (0 < th.tau_d < th.tau_sat):
            raise ConfigError("thresholds", "need 0 < tau_d < tau_sat")
        if th.enrichment_factor < 2 or th.enrichment_rounds < 1:
            raise ConfigError("thresholds", "enrichment_factor >= 2 and enrichment_rounds >= 1 required")
        if self.spectral_h is not None and not self.spectral_h >= 2 * domain.max_spacing:
            raise ConfigError("spectral.h", "must be at least 2 x grid spacing")


def _split_numbers(key: str, text: str, kind=float) -> tuple:
    parts = [s.strip() for s in text.split(",") if s.strip()]
    try:
        return tuple(kind(s) for s in parts)
    except ValueError:
        raise ConfigError(key, f"expected comma-separated {kind.__name__} values, got {text!r}") from None


def parse_config(text: str) -> ScenarioConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        if key in raw:
            raise ConfigError(key, "given more than once")
        raw[key] = value.strip()

    base = ScenarioConfig()
    kw: dict = {}
    th: dict = {}
    if "name" in raw:
        kw["name"] = raw["name"]
    lower = _split_numbers("domain.lower", raw["domain.lower"]) if "domain.lower" in raw else None
    upper = _split_numbers("domain.upper", raw["domain.upper"]) if "domain.upper" in raw else None
    cells = _split_numbers("domain.cells", raw["domain.cells"], int) if "domain.cells" in raw else None
    dim = int(_split_numbers("domain.dim", raw["domain.dim"], int)[0]) if "domain.dim" in raw else None
    if dim is None:
        dim = max(len(v) for v in (lower or (0,), upper or (0,), cells or (0,)))
    if dim not in (1, 2):
        raise ConfigError("domain.dim", f"must be 1 or 2, got {dim}")
    widen = lambda v, d: v * dim if v is not None and len(v) == 1 else (v if v is not None else d * dim)
    kw["lower"] = widen(lower, base.lower)
    kw["upper"] = widen(upper, base.upper)
    kw["cells"] = widen(cells, base.cells)
    for key, attr in (("exponent", "exponent"), ("kernel", "kernel"), ("family", "family"),
                      ("steklov.normalization", "normalization"), ("output.dir", "out_dir")):
        if key in raw:
            kw[attr] = raw[key]
    if "seed" in raw:
        kw["seed"] = int(_split_numbers("seed", raw["seed"], int)[0])
    for key, attr in (("schedule.h", "h_schedule"), ("schedule.eps", "eps_schedule"),
                      ("schedule.t", "t_schedule")):
        if key in raw:
            kw[attr] = _split_numbers(key, raw[key])
    if "spectral.h" in raw:
        kw["spectral_h"] = _split_numbers("spectral.h", raw["spectral.h"])[0]
    for name, kind in (("tau_d", float), ("tau_sat", float),
                       ("enrichment_factor", int), ("enrichment_rounds", int)):
        key = f"thresholds.{name}"
        if key in raw:
            th[name] = _split_numbers(key, raw[key], kind)[0]
    if th:
        kw["thresholds"] = replace(base.thresholds, **th)
    cfg = replace(base, **kw)
    cfg.validate()
    return cfg


BUILTINS: dict[str, str] = {
    "compact-demo": """\
name = compact-demo
domain.lower = 0
domain.upper = 1
domain.cells = 512
exponent = affine:1.5,1
kernel = ball
family = lipschitz-bumps:16
seed = 0
schedule.h = 0.2, 0.1, 0.05, 0.025, 0.0125
schedule.eps = 0.4, 0.2, 0.1
schedule.t = 0.2, 0.1, 0.05
spectral.h = 0.1
""",
    "noncompact-demo": """\
name = noncompact-demo
domain.lower = 0
domain.upper = 1
domain.cells = 1024
exponent = const:2
kernel = ball
family = oscillations:32
seed = 0
schedule.h = 0.2, 0.1, 0.05
schedule.eps = 0.5
schedule.t = 0.2, 0.1, 0.05
spectral.h = 0.1
""",
    "random-2d": """\
name = random-2d
domain.lower = 0, 0
domain.upper = 1, 1
domain.cells = 32, 32
exponent = sin:2,0.5,1
kernel = triangle
family = random-smooth:12,7
seed = 7
schedule.h = 0.3, 0.2, 0.1
schedule.eps = 0.4, 0.2
schedule.t = 0.3, 0.2, 0.1
spectral.h = 0.2
""",
}

ALIASES = {"lipschitz-bumps": "compact-demo", "oscillations:32": "noncompact-demo"}


def builtin_config(name: str) -> ScenarioConfig:
    key = ALIASES.get(name, name)
    if key not in BUILTINS:
        raise KeyError(f"no builtin scenario named {name!r}")
    return parse_config(BUILTINS[key])


def load_config(source: str | Path) -> ScenarioConfig:
    """Read a config file, or a builtin scenario by name (optionally ``builtin:<name>``)."""
    text = str(source)
    name = text[len("builtin:"):] if text.startswith("builtin:") else text
    path = Path(text)
    if not text.startswith("builtin:") and path.is_file():
        return parse_config(path.read_text(encoding="utf-8"))
    if ALIASES.get(name, name) in BUILTINS:
        return builtin_config(name)
    raise ConfigError("config", f"{text!r} is neither a readable file nor a builtin scenario "
                                f"({', '.join(list(BUILTINS) + list(ALIASES))})")


def build_family(cfg: ScenarioConfig):
    return make_family(cfg.family, cfg.domain(), seed=cfg.seed)
