"""Command-line entry point.

    varlex run <config> [--out DIR] [--cells N] [--seed S]
    varlex check-norms <config> [...]
    varlex spectral <config> [...]
    varlex presets

``<config>`` is a config file or the name of a builtin scenario.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .compactness import FalsificationError
from .config import ALIASES, BUILTINS, ConfigError, load_config
from .exponent import EXPONENT_PRESETS
from .families import GENERATORS
from .scenario import run_scenario, write_outputs
from .steklov import KERNEL_PRESETS

log = logging.getLogger("varlex")

VERB_STAGES = {
    "run": ("norms", "steklov", "compactness", "spectral"),
    "check-norms": ("norms",),
    "spectral": ("spectral",),
}


def list_presets() -> str:
    lines = ["exponent presets:"]
    lines += [f"  {k:<26} {v}" for k, v in EXPONENT_PRESETS.items()]
    lines.append("kernel presets:")
    lines += [f"  {k:<26} {v}" for k, v in KERNEL_PRESETS.items()]
    lines.append("family generators:")
    for name, (_, default, doc) in GENERATORS.items():
        spec, _, text = doc.partition(" - ")
        lines.append(f"  {spec:<26} {text} (default size {default})")
    lines.append("builtin scenarios:")
    lines += [f"  {name}" for name in BUILTINS]
    lines += [f"  {alias:<26} alias of {target}" for alias, target in ALIASES.items()]
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varlex", description="Variable exponent Lebesgue space toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (("run", "full pipeline"), ("check-norms", "norm property suite only"),
                            ("spectral", "eigenvalue and resolvent checks only")):
        sp = sub.add_parser(verb, help=help_text)
        sp.add_argument("config", help="config file or builtin scenario name")
        sp.add_argument("--out", default=None, help="output directory (default: config output.dir)")
        sp.add_argument("--cells", type=int, default=None, help="cells per axis override")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
    sub.add_parser("presets", help="list exponent, kernel and family presets")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.verb == "presets":
        sys.stdout.write(list_presets())
        return 0
    try:
        cfg = load_config(args.config).with_overrides(cells=args.cells, seed=args.seed, out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_scenario(cfg, VERB_STAGES[args.verb])
    except FalsificationError as exc:
        print(f"falsification: {exc}", file=sys.stderr)
        return 3
    paths = write_outputs(report, cfg.out_dir)
    for c in report.failed:
        print(f"FAILED {c.name}: {c.line()}", file=sys.stderr)
    verdict = f" verdict={report.compactness.verdict.value}" if report.compactness else ""
    print(f"{cfg.name}: {len(report.checks)} checks, {len(report.failed)} failed{verdict}; "
          f"wrote {', '.join(str(p) for p in paths)}")
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
