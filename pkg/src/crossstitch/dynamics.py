"""Emitters coupled to the cross-stitch lattice in the single-excitation sector.

The state vector holds the lattice amplitudes ``c_{x,a}`` (indices ``0..N-1``),
``c_{x,b}`` (``N..2N-1``) and one excited-state amplitude per emitter
(``2N..2N+Q-1``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .lattice import LatticeConfig, SiteIndex, Sublattice, build_lattice_hamiltonian
from .propagators import ChebyshevPropagator, DenseEigenPropagator

NORM_TOL = 1e-8


class EmitterKind(str, Enum):
    SMALL = "small"
    GIANT = "giant"


class PropagationError(RuntimeError):
    """Raised when a propagation violates its norm-conservation contract."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __reduce__(self):
        return type(self), (str(self), self.diagnostics)


@dataclass(frozen=True)
class EmitterSpec:
    """A two-level emitter.

    A small emitter couples with strength ``coupling`` to the single A site
    ``attach_a``. A giant emitter additionally couples to the B site
    ``attach_b`` with ``coupling * exp(1j * phase)``.
    """

    kind: EmitterKind
    frequency: float
    coupling: float
    attach_a: SiteIndex
    attach_b: SiteIndex | None = None
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", EmitterKind(self.kind))
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        if self.attach_a.sublattice is not Sublattice.A:
            raise ValueError("attach_a must be an A-sublattice site")
        if self.kind is EmitterKind.SMALL and self.attach_b is not None:
            raise ValueError("a small emitter has a single attachment")
        if self.kind is EmitterKind.GIANT:
            if self.attach_b is None or self.attach_b.sublattice is not Sublattice.B:
                raise ValueError("a giant emitter needs a B-sublattice attach_b")

    @classmethod
    def small(cls, frequency: float, coupling: float, cell: int) -> "EmitterSpec":
        return cls(EmitterKind.SMALL, frequency, coupling, SiteIndex(cell, Sublattice.A))

    @classmethod
    def giant(cls, frequency: float, coupling: float, cell: int, phase: float = 0.0, cell_b: int | None = None) -> "EmitterSpec":
        cell_b = cell if cell_b is None else cell_b
        return cls(
            EmitterKind.GIANT, frequency, coupling,
            SiteIndex(cell, Sublattice.A), SiteIndex(cell_b, Sublattice.B), phase,
        )

    def shifted(self, cells: int) -> "EmitterSpec":
        """Copy with every attachment moved by ``cells``."""
        b = None if self.attach_b is None else replace(self.attach_b, cell=self.attach_b.cell + cells)
        return replace(self, attach_a=replace(self.attach_a, cell=self.attach_a.cell + cells), attach_b=b)

    def phase_factor(self) -> complex:
        # reduce first so phi and phi + 2 pi give the same matrix element
        phi = math.fmod(self.phase, 2 * math.pi)
        if phi < 0:
            phi += 2 * math.pi
        if phi == 0.0:
            return 1.0 + 0.0j
        if phi == math.pi:
            return -1.0 + 0.0j
        return complex(math.cos(phi), math.sin(phi))


@dataclass(frozen=True)
class SystemHamiltonian:
    lattice: LatticeConfig
    emitters: tuple[EmitterSpec, ...]
    matrix: sp.csr_matrix

    @property
    def n_cells(self) -> int:
        return self.lattice.n_cells

    @property
    def n_emitters(self) -> int:
        return len(self.emitters)

    @property
    def dimension(self) -> int:
        return 2 * self.n_cells + self.n_emitters

    def emitter_index(self, q: int) -> int:
        if not 0 <= q < self.n_emitters:
            raise IndexError(f"emitter {q} out of range")
        return 2 * self.n_cells + q

    def site_index(self, site: SiteIndex) -> int:
        return site.index(self.n_cells)

    def excited(self, q: int = 0) -> "SystemState":
        """State with emitter ``q`` excited and the lattice in vacuum."""
        psi = np.zeros(self.dimension, dtype=complex)
        psi[self.emitter_index(q)] = 1.0
        return SystemState(psi, 0.0, self.n_cells)


@dataclass
class SystemState:
    amplitudes: np.ndarray
    time: float
    n_cells: int

    @property
    def emitter_amplitudes(self) -> np.ndarray:
        return self.amplitudes[2 * self.n_cells :]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class Trajectory:
    """Populations sampled on ``times``.

    ``cell_pops`` holds ``|c_{x,a}|^2 + |c_{x,b}|^2`` for every monitored cell;
    ``snapshots`` holds full states at the requested snapshot times.
    """

    times: np.ndarray
    emitter_amplitudes: np.ndarray
    lattice_pop: np.ndarray
    cell_pops: dict[int, np.ndarray]
    norm: np.ndarray
    energy: np.ndarray
    n_cells: int
    snapshots: dict[float, SystemState] = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def emitter_pops(self) -> np.ndarray:
        """``|c_e|^2`` with shape ``(n_times, Q)``."""
        return np.abs(self.emitter_amplitudes) ** 2

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - self.norm[0])))

    @property
    def energy_drift(self) -> float:
        """Largest energy change, relative to ``max(|E(0)|, 1)``."""
        scale = max(abs(self.energy[0]), 1.0)
        return float(np.max(np.abs(self.energy - self.energy[0])) / scale)


def assemble_system(lattice: LatticeConfig, emitters) -> SystemHamiltonian:
    """Full ``(2N + Q)``-dimensional Hamiltonian of lattice plus emitters."""
    emitters = tuple(emitters)
    if not emitters:
        raise ValueError("at least one emitter is required")
    n = lattice.n_cells
    dim = 2 * n + len(emitters)
    H_lat = build_lattice_hamiltonian(lattice).tocoo()
    rows, cols = [H_lat.row], [H_lat.col]
    vals = [H_lat.data.astype(complex)]
    for q, em in enumerate(emitters):
        e = 2 * n + q
        entries = [(em.attach_a.index(n), complex(em.coupling))]
        if em.kind is EmitterKind.GIANT:
            entries.append((em.attach_b.index(n), em.coupling * em.phase_factor()))
        rows.append(np.array([e]))
        cols.append(np.array([e]))
        vals.append(np.array([em.frequency], dtype=complex))
        for site, amp in entries:
            # <site|H|e> = amp, <e|H|site> = conj(amp)
            rows.append(np.array([site, e]))
            cols.append(np.array([e, site]))
            vals.append(np.array([amp, np.conj(amp)]))
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    H.sum_duplicates()
    return SystemHamiltonian(lattice, emitters, H)


def two_emitter_scenario(lattice: LatticeConfig, spec1: EmitterSpec, spec2: EmitterSpec, separation: int):
    """Place ``spec2`` ``separation`` cells to the right of ``spec1`` and excite emitter 1.

    ``spec2`` keeps its kind, frequency, coupling and phase; its attachments are
    those of ``spec1`` shifted by ``separation``.
    """
    if separation < 0:
        raise ValueError(f"separation must be >= 0, got {separation}")
    cell_a = spec1.attach_a.cell + separation
    cell_b = (spec1.attach_b.cell if spec1.attach_b is not None else spec1.attach_a.cell) + separation
    placed = replace(
        spec2,
        attach_a=SiteIndex(cell_a, Sublattice.A),
        attach_b=SiteIndex(cell_b, Sublattice.B) if spec2.kind is EmitterKind.GIANT else None,
    )
    for em in (spec1, placed):
        for site in (em.attach_a, em.attach_b):
            if site is not None and not 0 <= site.cell < lattice.n_cells:
                raise ValueError(f"emitter placed at cell {site.cell}, outside 0..{lattice.n_cells - 1}")
    system = assemble_system(lattice, [spec1, placed])
    return system, system.excited(0)


def _merge_grid(times: np.ndarray, extra) -> np.ndarray:
    extra = np.asarray(sorted(extra), dtype=float)
    if extra.size and (extra.min() < 0 or extra.max() > times[-1]):
        raise ValueError("snapshot times must lie within the propagation horizon")
    return np.unique(np.concatenate([times, extra]))


def evolve(
    system: SystemHamiltonian,
    initial: SystemState,
    times,
    *,
    monitor_cells=(),
    snapshot_times=(),
    method: str = "chebyshev",
    norm_tol: float = NORM_TOL,
) -> Trajectory:
    """Propagate ``initial`` and sample populations on ``times``.

    Parameters
    ----------
    system : SystemHamiltonian
    initial : SystemState
        Normalised state at ``t = 0``.
    times : array_like
        Increasing sample times starting at 0.
    monitor_cells : iterable of int
        Cells whose population ``|c_a|^2 + |c_b|^2`` is recorded at every sample.
    snapshot_times : iterable of float
        Times at which the full state is stored.
    method : {"chebyshev", "dense"}
    norm_tol : float
        Maximum tolerated norm drift; exceeding it raises ``PropagationError``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] != 0.0:
        raise ValueError("times must be a 1-D grid starting at 0")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    psi = np.asarray(initial.amplitudes, dtype=complex).copy()
    if psi.size != system.dimension:
        raise ValueError(f"state has dimension {psi.size}, system {system.dimension}")
    norm0 = np.linalg.norm(psi)
    if abs(norm0 - 1.0) > norm_tol:
        raise ValueError(f"initial state is not normalised (norm {norm0})")

    n = system.n_cells
    monitor_cells = [int(c) for c in monitor_cells]
    for c in monitor_cells:
        if not 0 <= c < n:
            raise IndexError(f"monitored cell {c} outside lattice")
    grid = _merge_grid(times, snapshot_times)
    wanted = set(np.round(np.asarray(snapshot_times, dtype=float), 12))
    H = system.matrix

    n_t = times.size
    emitter_amp = np.empty((n_t, system.n_emitters), dtype=complex)
    lattice_pop = np.empty(n_t)
    cell_pops = {c: np.empty(n_t) for c in monitor_cells}
    norm = np.empty(n_t)
    energy = np.empty(n_t)
    snapshots = {}

    if method == "dense":
        states = DenseEigenPropagator(H).propagate(psi, grid)
        step_info = {"method": "dense"}
    elif method == "chebyshev":
        states = None
        cache: dict[float, ChebyshevPropagator] = {}
        step_info = {"method": "chebyshev"}
    else:
        raise ValueError(f"unknown method {method!r}")

    sample = 0
    horizon = grid[-1]
    for i, t in enumerate(grid):
        if states is not None:
            psi = states[i]
        elif i > 0:
            dt = t - grid[i - 1]
            key = round(dt, 12)
            prop = cache.get(key)
            if prop is None:
                prop = cache[key] = ChebyshevPropagator(H, dt)
                step_info.setdefault("steps", {})[key] = prop.n_terms
            psi = prop.step(psi)
        if sample < n_t and t == times[sample]:
            pops = np.abs(psi[: 2 * n]) ** 2
            emitter_amp[sample] = psi[2 * n :]
            lattice_pop[sample] = pops.sum()
            for c in monitor_cells:
                cell_pops[c][sample] = pops[c] + pops[n + c]
            norm[sample] = np.sqrt(pops.sum() + np.sum(np.abs(psi[2 * n :]) ** 2))
            energy[sample] = np.vdot(psi, H @ psi).real
            drift = abs(norm[sample] - norm0)
            if drift > norm_tol:
                diag = {"time": float(t), "horizon": float(horizon), "norm_drift": float(drift), **step_info}
                raise PropagationError(
                    f"norm drift {drift:.3e} exceeds {norm_tol:.1e} at t={t:g} "
                    f"(horizon {horizon:g}, steps {step_info.get('steps')})",
                    diag,
                )
            sample += 1
        if round(t, 12) in wanted:
            snapshots[float(t)] = SystemState(psi.copy(), float(t), n)

    traj = Trajectory(
        times=times,
        emitter_amplitudes=emitter_amp,
        lattice_pop=lattice_pop,
        cell_pops=cell_pops,
        norm=norm,
        energy=energy,
        n_cells=n,
        snapshots=snapshots,
        diagnostics=step_info,
    )
    traj.diagnostics.update(norm_drift=traj.norm_drift, energy_drift=traj.energy_drift, horizon=float(horizon))
    return traj


def populations(trajectory: Trajectory, coupling_cell) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Emitter, coupling-cell and remaining-lattice populations ``(P_e, P_0, P_d)``.

    ``P_e`` sums over all emitters. ``coupling_cell`` is a cell number or a
    ``SiteIndex`` and must have been monitored during ``evolve``.
    """
    cell = coupling_cell.cell if isinstance(coupling_cell, SiteIndex) else int(coupling_cell)
    if cell not in trajectory.cell_pops:
        raise ValueError(f"cell {cell} was not monitored; pass it in monitor_cells")
    p_e = trajectory.emitter_pops.sum(axis=1)
    p_0 = trajectory.cell_pops[cell]
    p_d = trajectory.lattice_pop - p_0
    return p_e, p_0, p_d


def field_profile(state: SystemState) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell photon populations ``(|c_{x,a}|^2, |c_{x,b}|^2)``."""
    n = state.n_cells
    amp = np.asarray(state.amplitudes)
    return np.abs(amp[:n]) ** 2, np.abs(amp[n : 2 * n]) ** 2


def emitter_frequency(trajectory: Trajectory, emitter: int = 0, fraction: float = 0.2) -> float:
    """Mean oscillation frequency of an emitter amplitude over the final ``fraction`` of a run.

    Minus the slope of the unwrapped phase, i.e. the energy of the dominant
    stationary component once transients have left.
    """
    amp = trajectory.emitter_amplitudes[:, emitter]
    n = max(int(round(fraction * amp.size)), 2)
    phase = np.unwrap(np.angle(amp[-n:]))
    return -float(np.polyfit(trajectory.times[-n:], phase, 1)[0])


def stationary_component(system: SystemHamiltonian, state: SystemState, energy: float,
                         duration: float, dt: float = 1.0) -> SystemState:
    """Part of ``state`` that oscillates at ``energy``, by windowed demodulation.

    The state is propagated for ``duration`` more and ``psi(t) exp(i E t)`` is
    Hann-averaged; contributions at other energies are suppressed by the
    window, so what remains is the projection onto eigenstates near ``energy``
    (with the phase of the starting time).
    """
    steps = int(math.ceil(duration / dt))
    if steps < 2:
        raise ValueError("duration must span at least two steps")
    prop = ChebyshevPropagator(system.matrix, dt)
    weights = np.hanning(steps + 1)
    psi = np.asarray(state.amplitudes, dtype=complex).copy()
    acc = np.zeros_like(psi)
    for j, w in enumerate(weights):
        if w:
            acc += w * np.exp(1j * energy * j * dt) * psi
        if j < steps:
            psi = prop.step(psi)
    return SystemState(acc / weights.sum(), state.time, state.n_cells)
