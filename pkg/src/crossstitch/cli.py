"""Command-line entry point: ``crossstitch run|validate|list-scenarios|bands``."""
from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config, load_preset, preset_names, with_parameter
from .dynamics import PropagationError
from .runner import forbid_randomness, run, write_bands, write_table

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICS = 3


def resolve_config(ref: str):
    """A preset name or a path to a YAML config file."""
    path = Path(ref)
    if path.suffix in {".yaml", ".yml"} or path.exists():
        if not path.exists():
            raise ConfigError(f"no such config file: {ref}", source=ref)
        return load_config(path)
    if ref in preset_names():
        return load_preset(ref)
    raise ConfigError(f"unknown preset {ref!r}; available: {', '.join(preset_names())}", source=ref)


def _parse_overrides(items) -> dict[str, dict[str, float]]:
    overrides: dict[str, dict[str, float]] = {}
    for item in items or ():
        preset, sep, rest = item.partition(":")
        param, eq, value = rest.partition("=")
        if not sep or not eq or preset not in preset_names():
            raise ConfigError(f"bad override {item!r}; expected <preset>:<parameter>=<value>", source="--set")
        try:
            number = float(value)
        except ValueError:
            raise ConfigError(f"override value {value!r} is not a number", source="--set") from None
        # reject unknown parameters before any simulation starts
        with_parameter(load_preset(preset), param, number)
        overrides.setdefault(preset, {})[param] = number
    return overrides


def cmd_run(args) -> int:
    config = resolve_config(args.config)
    out = Path(args.out) if args.out else Path("runs") / config.scenario
    result = run(config, out, jobs=args.jobs)
    for value, point in result.points:
        label = "" if value is None else f"[{config.sweep.parameter}={value}] "
        summary = ", ".join(f"{k}={v:.6g}" for k, v in point.summary.items())
        print(f"{label}{summary}")
    print(f"wrote {len(result.files)} files under {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import select, validate

    criteria = select(args.suite, args.only)
    overrides = _parse_overrides(args.set)

    def progress(crit, checks):
        status = "PASS" if all(c.passed for c in checks) else "FAIL"
        print(f"{crit.key} {status} {crit.title}")
        for check in checks:
            print("    " + check.line())
        sys.stdout.flush()

    report = validate(criteria, overrides=overrides, progress=progress)
    if args.out:
        header, rows = report.table()
        write_table(Path(args.out) / "validation.csv", header, list(zip(*rows)) if rows else [[] for _ in header],
                    f"# crossstitch {__version__}\n")
    n_fail = sum(not c.passed for c in report.checks)
    print(f"{len(report.checks) - n_fail}/{len(report.checks)} checks passed")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_list(args) -> int:
    for name in preset_names():
        cfg = load_preset(name)
        print(f"{name:12s} {cfg.description}")
    return EXIT_OK


def cmd_bands(args) -> int:
    config = resolve_config(args.config)
    info, files = write_bands(config, args.out, n_k=args.n_k)
    for k, v in info.items():
        print(f"{k}: {v}")
    if files:
        print(f"wrote {files[0]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crossstitch", description="Emitters coupled to a cross-stitch flat-band lattice.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seedless", action="store_true", help="fail if any random number generator is touched")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a preset or config file and write tables")
    p.add_argument("config", help="preset name or path to a YAML config")
    p.add_argument("--out", help="output directory (default runs/<scenario>)")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="compare simulations with closed-form predictions")
    p.add_argument("--suite", choices=["all", "fast"], default="all")
    p.add_argument("--only", nargs="*", metavar="CRITERION", help="run only these criteria (c1..c10); empty runs none")
    p.add_argument("--set", action="append", metavar="PRESET:PARAM=VALUE", help="perturb a preset before validating")
    p.add_argument("--out", help="directory for validation.csv")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("list-scenarios", help="list shipped presets")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("bands", help="band structure of a config's lattice")
    p.add_argument("config")
    p.add_argument("--out", help="directory for bands.csv")
    p.add_argument("--n-k", type=int, default=256)
    p.set_defaults(func=cmd_bands)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    guard = forbid_randomness() if args.seedless else contextlib.nullcontext()
    try:
        with guard:
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PropagationError as exc:
        print(f"numerical tolerance failure: {exc}", file=sys.stderr)
        for k, v in getattr(exc, "diagnostics", {}).items():
            print(f"    {k}: {v}", file=sys.stderr)
        return EXIT_NUMERICS
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
