"""Scenario configuration documents (YAML) and the shipped presets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import yaml

from .dynamics import EmitterKind, EmitterSpec
from .lattice import Boundary, LatticeConfig, SiteIndex, Sublattice

SCENARIOS = ("fig2", "fig4a", "fig4b", "fig5", "fig7", "fig8a", "fig8c", "custom")
SWEEP_PARAMETERS = (
    "separation",
    "lattice.n_cells", "lattice.inter_hop", "lattice.intra_hop", "lattice.onsite",
    "emitters.frequency", "emitters.coupling", "emitters.phase",
)

_TOP_KEYS = {"scenario", "description", "notes", "lattice", "emitters", "horizon",
             "sample_spacing", "snapshots", "spectrum", "sweep"}
_LATTICE_KEYS = {"n_cells", "inter_hop", "intra_hop", "onsite", "boundary"}
_EMITTER_KEYS = {"kind", "frequency", "coupling", "phase", "cell", "cell_b"}


class ConfigError(ValueError):
    """Invalid scenario document; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class Sweep:
    parameter: str
    values: tuple


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    lattice: LatticeConfig
    emitters: tuple[EmitterSpec, ...]
    horizon: float
    sample_spacing: float
    snapshots: tuple[float, ...] = ()
    spectrum: bool = False
    sweep: Sweep | None = None
    description: str = ""
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def n_samples(self) -> int:
        return int(round(self.horizon / self.sample_spacing)) + 1


def _line_map(node, path=(), lines=None) -> dict:
    lines = {} if lines is None else lines
    lines.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            p = path + (key.value,)
            lines[p] = key.start_mark.line + 1
            _line_map(value, p, lines)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _line_map(item, path + (i,), lines)
    return lines


class _Reader:
    def __init__(self, lines: dict, source: str):
        self.lines = lines
        self.source = source

    def error(self, message: str, path) -> ConfigError:
        path = tuple(path)
        while path and path not in self.lines:
            path = path[:-1]
        return ConfigError(message, self.lines.get(path), self.source)

    def mapping(self, data, path, allowed):
        if not isinstance(data, dict):
            raise self.error(f"'{'.'.join(map(str, path)) or 'document'}' must be a mapping", path)
        unknown = set(data) - allowed
        if unknown:
            key = sorted(map(str, unknown))[0]
            raise self.error(f"unknown key '{key}'", tuple(path) + (key,))
        return data

    def number(self, data, key, path, default=None, integer=False):
        if key not in data:
            if default is None:
                raise self.error(f"missing required key '{key}'", path)
            return default
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(f"'{key}' must be a number, got {value!r}", tuple(path) + (key,))
        if integer and int(value) != value:
            raise self.error(f"'{key}' must be an integer, got {value!r}", tuple(path) + (key,))
        if not math.isfinite(value):
            raise self.error(f"'{key}' must be finite", tuple(path) + (key,))
        return int(value) if integer else float(value)


def _read_lattice(r: _Reader, data) -> LatticeConfig:
    path = ("lattice",)
    r.mapping(data, path, _LATTICE_KEYS)
    boundary = data.get("boundary", "periodic")
    if boundary not in {b.value for b in Boundary}:
        raise r.error(f"boundary must be 'periodic' or 'open', got {boundary!r}", path + ("boundary",))
    n_cells = r.number(data, "n_cells", path, integer=True)
    if n_cells < 2:
        raise r.error("n_cells must be >= 2", path + ("n_cells",))
    return LatticeConfig(
        n_cells=n_cells,
        inter_hop=r.number(data, "inter_hop", path),
        intra_hop=r.number(data, "intra_hop", path),
        onsite=r.number(data, "onsite", path, default=0.0),
        boundary=Boundary(boundary),
    )


def _read_emitter(r: _Reader, data, i: int, n_cells: int) -> EmitterSpec:
    path = ("emitters", i)
    r.mapping(data, path, _EMITTER_KEYS)
    kind = data.get("kind")
    if kind not in {k.value for k in EmitterKind}:
        raise r.error(f"kind must be 'small' or 'giant', got {kind!r}", path + ("kind",))
    cell = r.number(data, "cell", path, integer=True)
    cell_b = r.number(data, "cell_b", path, default=cell, integer=True)
    for key, c in (("cell", cell), ("cell_b", cell_b)):
        if not 0 <= c < n_cells:
            raise r.error(f"{key} {c} outside 0..{n_cells - 1}", path + (key,))
    coupling = r.number(data, "coupling", path)
    if coupling < 0:
        raise r.error("coupling must be >= 0", path + ("coupling",))
    frequency = r.number(data, "frequency", path)
    phase = r.number(data, "phase", path, default=0.0)
    if kind == "small":
        if "cell_b" in data:
            raise r.error("small emitters take a single 'cell'", path + ("cell_b",))
        if phase != 0.0:
            raise r.error("'phase' applies to giant emitters only", path + ("phase",))
        return EmitterSpec.small(frequency, coupling, cell)
    return EmitterSpec.giant(frequency, coupling, cell, phase, cell_b)


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    """Parse a YAML scenario document, reporting problems with their line numbers."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", mark.line + 1 if mark else None, source) from None
    if node is None:
        raise ConfigError("empty document", 1, source)
    r = _Reader(_line_map(node), source)
    r.mapping(data, (), _TOP_KEYS)

    scenario = data.get("scenario", "custom")
    if scenario not in SCENARIOS:
        raise r.error(f"scenario must be one of {', '.join(SCENARIOS)}; got {scenario!r}", ("scenario",))
    if "lattice" not in data:
        raise r.error("missing required key 'lattice'", ())
    lattice = _read_lattice(r, data["lattice"])

    raw_emitters = data.get("emitters")
    if not isinstance(raw_emitters, list) or not raw_emitters:
        raise r.error("'emitters' must be a non-empty list", ("emitters",))
    emitters = tuple(_read_emitter(r, e, i, lattice.n_cells) for i, e in enumerate(raw_emitters))

    horizon = r.number(data, "horizon", ())
    spacing = r.number(data, "sample_spacing", ())
    if horizon <= 0:
        raise r.error("horizon must be positive", ("horizon",))
    if spacing <= 0 or spacing > horizon:
        raise r.error("sample_spacing must lie in (0, horizon]", ("sample_spacing",))
    if abs(horizon / spacing - round(horizon / spacing)) > 1e-9:
        raise r.error("horizon must be a whole number of sample spacings", ("sample_spacing",))

    snapshots = data.get("snapshots") or []
    if not isinstance(snapshots, list):
        raise r.error("'snapshots' must be a list of times", ("snapshots",))
    for i, s in enumerate(snapshots):
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not 0 <= s <= horizon:
            raise r.error(f"snapshot time {s!r} must lie in [0, horizon]", ("snapshots", i))

    spectrum = data.get("spectrum", False)
    if not isinstance(spectrum, bool):
        raise r.error("'spectrum' must be true or false", ("spectrum",))

    sweep = None
    raw_sweep = data.get("sweep")
    if raw_sweep is not None:
        r.mapping(raw_sweep, ("sweep",), {"parameter", "values"})
        param = raw_sweep.get("parameter")
        if param not in SWEEP_PARAMETERS:
            raise r.error(f"unsupported sweep parameter {param!r}", ("sweep", "parameter"))
        values = raw_sweep.get("values")
        if not isinstance(values, list) or not values:
            raise r.error("sweep values must be a non-empty list", ("sweep", "values"))
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise r.error(f"sweep value {v!r} is not a number", ("sweep", "values", i))
        if param == "separation" and len(emitters) < 2:
            raise r.error("a separation sweep needs two emitters", ("sweep", "parameter"))
        sweep = Sweep(param, tuple(values))

    notes = data.get("notes") or []
    if not isinstance(notes, list) or not all(isinstance(n, str) for n in notes):
        raise r.error("'notes' must be a list of strings", ("notes",))

    return ScenarioConfig(
        scenario=scenario,
        lattice=lattice,
        emitters=emitters,
        horizon=horizon,
        sample_spacing=spacing,
        snapshots=tuple(float(s) for s in snapshots),
        spectrum=spectrum,
        sweep=sweep,
        description=str(data.get("description", "")),
        notes=tuple(notes),
    )


def config_to_dict(config: ScenarioConfig) -> dict:
    lat = config.lattice
    emitters = []
    for em in config.emitters:
        entry = {"kind": em.kind.value, "frequency": em.frequency, "coupling": em.coupling}
        if em.kind is EmitterKind.GIANT:
            entry["phase"] = em.phase
        entry["cell"] = em.attach_a.cell
        if em.kind is EmitterKind.GIANT:
            entry["cell_b"] = em.attach_b.cell
        emitters.append(entry)
    return {
        "scenario": config.scenario,
        "description": config.description,
        "notes": list(config.notes),
        "lattice": {
            "n_cells": lat.n_cells, "inter_hop": lat.inter_hop, "intra_hop": lat.intra_hop,
            "onsite": lat.onsite, "boundary": lat.boundary.value,
        },
        "emitters": emitters,
        "horizon": config.horizon,
        "sample_spacing": config.sample_spacing,
        "snapshots": list(config.snapshots),
        "spectrum": config.spectrum,
        "sweep": None if config.sweep is None else {"parameter": config.sweep.parameter, "values": list(config.sweep.values)},
    }


def dump_config(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False, width=100, allow_unicode=True)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path))


def preset_names() -> list[str]:
    root = resources.files("crossstitch") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml") and p.name != "schema.yaml")


def preset_text(name: str) -> str:
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return (resources.files("crossstitch") / "presets" / f"{name}.yaml").read_text(encoding="utf-8")


def load_preset(name: str) -> ScenarioConfig:
    return parse_config(preset_text(name), f"preset:{name}")


def schema_text() -> str:
    return (resources.files("crossstitch") / "presets" / "schema.yaml").read_text(encoding="utf-8")


def with_parameter(config: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    """Copy of ``config`` with one sweepable parameter set to ``value``."""
    if parameter == "separation":
        if len(config.emitters) < 2:
            raise ConfigError("separation needs two emitters")
        first, second = config.emitters[0], config.emitters[1]
        d = int(value)
        moved = replace(
            second,
            attach_a=SiteIndex(first.attach_a.cell + d, Sublattice.A),
            attach_b=None if second.attach_b is None else SiteIndex(
                (first.attach_b.cell if first.attach_b is not None else first.attach_a.cell) + d, Sublattice.B),
        )
        for site in (moved.attach_a, moved.attach_b):
            if site is not None and not 0 <= site.cell < config.lattice.n_cells:
                raise ConfigError(f"separation {d} places emitter 2 outside the lattice")
        return replace(config, emitters=(first, moved) + config.emitters[2:], sweep=None)
    group, _, name = parameter.partition(".")
    if group == "lattice" and name in _LATTICE_KEYS - {"boundary"}:
        value = int(value) if name == "n_cells" else float(value)
        return replace(config, lattice=replace(config.lattice, **{name: value}), sweep=None)
    if group == "emitters" and name in {"frequency", "coupling", "phase"}:
        emitters = tuple(replace(em, **{name: float(value)}) for em in config.emitters)
        return replace(config, emitters=emitters, sweep=None)
    raise ConfigError(f"unsupported parameter {parameter!r}")


def sweep_points(config: ScenarioConfig) -> list[tuple[object, ScenarioConfig]]:
    if config.sweep is None:
        return [(None, config)]
    return [(v, with_parameter(config, config.sweep.parameter, v)) for v in config.sweep.values]
