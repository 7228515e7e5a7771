"""Run scenario configurations and write plot-ready tables."""
from __future__ import annotations

import contextlib
import csv
import io
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, dump_config, sweep_points
from .dynamics import PropagationError, Trajectory, assemble_system, evolve, field_profile, populations
from .lattice import band_structure
from .spectral import extract_peaks, population_spectrum

TAIL_FRACTION = 0.2


@dataclass
class PointResult:
    config: ScenarioConfig
    trajectory: Trajectory
    summary: dict
    files: list[Path] = field(default_factory=list)


@dataclass
class RunResult:
    config: ScenarioConfig
    points: list[tuple[object, PointResult]]
    files: list[Path]


def time_grid(config: ScenarioConfig) -> np.ndarray:
    return config.sample_spacing * np.arange(config.n_samples)


def simulate(config: ScenarioConfig, method: str = "chebyshev") -> Trajectory:
    """Propagate the configured system from emitter 1 excited."""
    system = assemble_system(config.lattice, config.emitters)
    monitor = sorted({em.attach_a.cell for em in config.emitters})
    try:
        return evolve(
            system, system.excited(0), time_grid(config),
            monitor_cells=monitor, snapshot_times=config.snapshots, method=method,
        )
    except PropagationError as exc:
        raise PropagationError(f"scenario {config.scenario}: {exc}", {"scenario": config.scenario, **exc.diagnostics}) from exc


def tail(series: np.ndarray, fraction: float = TAIL_FRACTION) -> np.ndarray:
    """Final ``fraction`` of a series (at least two samples)."""
    n = max(int(round(fraction * series.size)), 2)
    return series[-n:]


def summarize(config: ScenarioConfig, traj: Trajectory) -> dict:
    pops = traj.emitter_pops
    summary = {
        "norm_drift": traj.norm_drift,
        "energy_drift": traj.energy_drift,
        "P_e1_final": float(pops[-1, 0]),
        "P_e1_tail_mean": float(tail(pops[:, 0]).mean()),
        "P_e1_tail_peak_to_trough": float(np.ptp(tail(pops[:, 0]))),
    }
    if pops.shape[1] > 1:
        summary["P_e2_max"] = float(pops[:, 1].max())
        if traj.times.size >= 64:
            spec = population_spectrum(pops[:, 1], traj.times, "hann", pad=4)
            peaks = extract_peaks(spec, 0.1) if pops[:, 1].max() > 1e-6 else []
            summary["P_e2_first_peak"] = peaks[0].frequency if peaks else float("nan")
    return summary


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def preamble(config: ScenarioConfig, extra: dict | None = None) -> str:
    lines = [f"crossstitch {__version__}", f"scenario: {config.scenario}"]
    lines += [f"note: {n}" for n in config.notes]
    for k, v in (extra or {}).items():
        lines.append(f"{k}: {_fmt(v)}")
    lines.append("config:")
    lines += ["  " + line for line in dump_config(config).splitlines()]
    return "".join(f"# {line}\n" for line in lines)


def write_table(path: Path, header: list[str], columns, meta: str) -> Path:
    """Write a CSV table with a commented preamble, atomically."""
    buf = io.StringIO()
    buf.write(meta)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([_fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)
    return path


def write_point(config: ScenarioConfig, traj: Trajectory, out_dir: Path) -> tuple[dict, list[Path]]:
    meta = preamble(config)
    q = traj.emitter_pops.shape[1]
    cell0 = config.emitters[0].attach_a.cell
    _, p0, pd = populations(traj, cell0)
    pe_cols = [traj.emitter_pops[:, i] for i in range(q)]
    pe_names = ["P_e"] if q == 1 else [f"P_e{i + 1}" for i in range(q)]
    files = [write_table(out_dir / "trajectory.csv", ["time", *pe_names, "P_0", "P_d"], [traj.times, *pe_cols, p0, pd], meta)]
    for t, state in sorted(traj.snapshots.items()):
        pa, pb = field_profile(state)
        cells = np.arange(state.n_cells)
        files.append(write_table(out_dir / f"profile_t{t:g}.csv", ["cell", "P_a", "P_b"], [cells, pa, pb], preamble(config, {"time": t})))
    if config.spectrum and traj.times.size >= 64:
        spectra = [population_spectrum(col, traj.times, "hann") for col in pe_cols]
        files.append(write_table(
            out_dir / "spectrum.csv", ["frequency", *pe_names],
            [spectra[0].frequencies, *[s.power for s in spectra]],
            preamble(config, {"window": "hann", "resolution": spectra[0].resolution}),
        ))
    summary = summarize(config, traj)
    files.append(write_table(out_dir / "summary.csv", ["quantity", "value"], [list(summary), list(summary.values())], meta))
    return summary, files


def _run_point(args) -> PointResult:
    config, out_dir = args
    traj = simulate(config)
    summary, files = write_point(config, traj, Path(out_dir)) if out_dir is not None else (summarize(config, traj), [])
    return PointResult(config, traj, summary, files)


def run(config: ScenarioConfig, out_dir=None, jobs: int = 1) -> RunResult:
    """Simulate every sweep point of ``config`` and write its tables under ``out_dir``."""
    out = Path(out_dir) if out_dir is not None else None
    points = sweep_points(config)
    tasks = []
    for value, cfg in points:
        sub = None
        if out is not None:
            sub = out if value is None else out / f"{config.sweep.parameter}={_fmt(value)}"
        tasks.append((cfg, sub))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_point, tasks))
    else:
        results = [_run_point(t) for t in tasks]
    files = [f for r in results for f in r.files]
    if config.sweep is not None and out is not None:
        keys = sorted({k for r in results for k in r.summary})
        columns = [[v for v, _ in points]] + [[r.summary.get(k, float("nan")) for r in results] for k in keys]
        files.append(write_table(out / "sweep_summary.csv", [config.sweep.parameter, *keys], columns, preamble(config)))
    return RunResult(config, list(zip([v for v, _ in points], results)), files)


def write_bands(config: ScenarioConfig, out_dir, n_k: int = 256) -> tuple[dict, list[Path]]:
    bands = band_structure(config.lattice, n_k)
    info = {
        "flat_energy": bands.flat_energy,
        "band_edge_min": bands.band_edge_min,
        "band_edge_max": bands.band_edge_max,
        "band_edge_k": bands.band_edge_k,
        "curvature": bands.curvature,
        "gap_present": bands.gap_present,
    }
    files = []
    if out_dir is not None:
        files.append(write_table(
            Path(out_dir) / "bands.csv", ["k", "E_flat", "E_dispersive"],
            [bands.k_grid, bands.flat_energies, bands.dispersive_energies], preamble(config, info),
        ))
    return info, files


class RandomnessUsed(RuntimeError):
    pass


@contextlib.contextmanager
def forbid_randomness():
    """Make any call into ``random`` or ``numpy.random`` raise for the duration."""

    def guard(*args, **kwargs):
        raise RandomnessUsed("random number generation is not allowed in a --seedless run")

    targets = [(random, name) for name in ("random", "seed", "randint", "uniform", "gauss", "choice", "shuffle", "Random")]
    targets += [(np.random, name) for name in ("default_rng", "seed", "rand", "randn", "random", "randint", "normal",
                                                "uniform", "choice", "shuffle", "RandomState", "Generator")]
    saved = [(mod, name, getattr(mod, name)) for mod, name in targets if hasattr(mod, name)]
    try:
        for mod, name, _ in saved:
            setattr(mod, name, guard)
        yield
    finally:
        for mod, name, original in saved:
            setattr(mod, name, original)
