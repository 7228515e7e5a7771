"""Cross-stitch lattice: real-space Hamiltonian, bands and the flat/dispersive basis.

Sites are ordered A-sublattice first (indices ``0..N-1``) followed by the
B-sublattice (``N..2N-1``). Every A/B site hops with amplitude ``-J`` to both
sites of the neighbouring cell, and the two sites of one cell are joined by
``-t``. The antisymmetric cell combination ``(a - b)/sqrt(2)`` is then an exact
eigenmode at energy ``t`` (the flat band) and the symmetric one forms a chain
with hopping ``-2J`` (the dispersive band ``-4J cos k - t``).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

SQRT2 = np.sqrt(2.0)


class Boundary(str, Enum):
    PERIODIC = "periodic"
    OPEN = "open"


class Sublattice(str, Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class LatticeConfig:
    """Parameters of the cross-stitch bath.

    Attributes
    ----------
    n_cells : int
        Number of unit cells ``N`` (``2N`` sites).
    inter_hop : float
        Inter-cell hopping ``J``.
    intra_hop : float
        Intra-cell hopping ``t``.
    onsite : float
        Mode frequency ``omega_0``; zero in the rotating frame.
    boundary : Boundary
        ``periodic`` adds the wrap-around bonds between cells ``N-1`` and ``0``.
    """

    n_cells: int
    inter_hop: float = 1.0
    intra_hop: float = 0.0
    onsite: float = 0.0
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValueError(f"n_cells must be an integer >= 2, got {self.n_cells!r}")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        for name in ("inter_hop", "intra_hop", "onsite"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def n_sites(self) -> int:
        return 2 * self.n_cells


@dataclass(frozen=True)
class SiteIndex:
    """A lattice site addressed by its cell and sublattice."""

    cell: int
    sublattice: Sublattice = Sublattice.A

    def __post_init__(self):
        object.__setattr__(self, "sublattice", Sublattice(self.sublattice))
        object.__setattr__(self, "cell", int(self.cell))

    def index(self, n_cells: int) -> int:
        """Position of the site in the ``2N`` lattice basis."""
        if not 0 <= self.cell < n_cells:
            raise IndexError(f"cell {self.cell} outside lattice of {n_cells} cells")
        return self.cell if self.sublattice is Sublattice.A else n_cells + self.cell


@dataclass(frozen=True)
class BandStructure:
    k_grid: np.ndarray
    flat_energy: float
    dispersive_energies: np.ndarray
    gap_present: bool
    band_edge_min: float
    band_edge_max: float
    band_edge_k: float
    curvature: float

    @property
    def flat_energies(self) -> np.ndarray:
        return np.full_like(self.k_grid, self.flat_energy)


@dataclass(frozen=True)
class FDBasisAmplitudes:
    """Per-cell amplitudes in the flat (``c_f``) and dispersive (``c_d``) channels."""

    c_f: np.ndarray
    c_d: np.ndarray

    def to_ab(self) -> tuple[np.ndarray, np.ndarray]:
        return fd_to_ab(self.c_f, self.c_d)


def build_lattice_hamiltonian(config: LatticeConfig, corner_terms: bool | None = None) -> sp.csr_matrix:
    """Sparse ``2N x 2N`` real-space Hamiltonian of the lattice.

    Parameters
    ----------
    config : LatticeConfig
    corner_terms : bool, optional
        Whether to include the wrap-around bonds. Defaults to the boundary
        mode; requesting them on an open lattice is an error.

    Returns
    -------
    scipy.sparse.csr_matrix
        Real symmetric matrix. Repeated bonds (``N = 2`` with periodic
        boundaries) are summed.
    """
    periodic = config.boundary is Boundary.PERIODIC
    if corner_terms is None:
        corner_terms = periodic
    elif corner_terms and not periodic:
        raise ValueError("corner terms requested for an open lattice")

    n = config.n_cells
    J, t = config.inter_hop, config.intra_hop
    cells = np.arange(n)
    src = cells if corner_terms else cells[:-1]
    dst = (src + 1) % n

    rows, cols, vals = [], [], []
    # inter-cell bonds A-A, A-B, B-A, B-B
    for oi in (0, n):
        for oj in (0, n):
            rows += [src + oi, dst + oj]
            cols += [dst + oj, src + oi]
            vals += [np.full(src.size, -J)] * 2
    rows += [cells, cells + n]
    cols += [cells + n, cells]
    vals += [np.full(n, -t)] * 2
    if config.onsite != 0.0:
        rows.append(np.arange(2 * n))
        cols.append(np.arange(2 * n))
        vals.append(np.full(2 * n, config.onsite))

    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * n, 2 * n),
    )
    return H.tocsr()


def k_grid(n_k: int) -> np.ndarray:
    """Wavenumbers ``2 pi m / n_k`` for ``m`` in ``(-n_k/2, n_k/2]``."""
    if n_k < 2:
        raise ValueError(f"n_k must be >= 2, got {n_k}")
    m = np.arange(-((n_k - 1) // 2), n_k // 2 + 1)
    return 2 * np.pi * m / n_k


def dispersive_energy(config: LatticeConfig, k) -> np.ndarray:
    return -4.0 * config.inter_hop * np.cos(k) - config.intra_hop + config.onsite


def flat_energy(config: LatticeConfig) -> float:
    return config.intra_hop + config.onsite


def band_edge(config: LatticeConfig) -> tuple[float, float, float]:
    """Lower edge of the dispersive band, the wavenumber where it sits and the curvature.

    The curvature is half the second derivative at the minimum, ``2|J|``;
    the minimum is at ``k = 0`` for ``J >= 0`` and at ``k = pi`` otherwise.
    """
    J = config.inter_hop
    k_min = 0.0 if J >= 0 else np.pi
    e_min = float(dispersive_energy(config, k_min))
    curvature = 0.5 * 4.0 * J * np.cos(k_min)
    return e_min, k_min, float(curvature)


def band_structure(config: LatticeConfig, n_k: int) -> BandStructure:
    k = k_grid(n_k)
    e_min, k_min, alpha = band_edge(config)
    e_max = float(dispersive_energy(config, np.pi - k_min))
    return BandStructure(
        k_grid=k,
        flat_energy=flat_energy(config),
        dispersive_energies=dispersive_energy(config, k),
        gap_present=bool(abs(config.intra_hop) > 2 * abs(config.inter_hop)),
        band_edge_min=e_min,
        band_edge_max=e_max,
        band_edge_k=k_min,
        curvature=alpha,
    )


def group_velocity(config: LatticeConfig, k) -> np.ndarray:
    """Slope ``dE_d/dk = 4 J sin k`` of the dispersive band."""
    return 4.0 * config.inter_hop * np.sin(k)


def resonant_k(config: LatticeConfig, omega_e: float) -> float | None:
    """Wavenumber in ``[0, pi]`` where the dispersive band meets ``omega_e``.

    Returns ``None`` when ``omega_e`` lies outside the dispersive band, which
    places the emitter in a gap.
    """
    J = config.inter_hop
    if J == 0.0:
        return None
    c = -(omega_e + config.intra_hop - config.onsite) / (4.0 * J)
    if abs(c) > 1.0:
        return None
    return float(np.arccos(c))


def ab_to_fd(a_amp, b_amp):
    """Map sublattice amplitudes to ``(c_f, c_d) = ((a - b)/sqrt2, (a + b)/sqrt2)``."""
    a_amp = np.asarray(a_amp)
    b_amp = np.asarray(b_amp)
    return (a_amp - b_amp) / SQRT2, (a_amp + b_amp) / SQRT2


def fd_to_ab(c_f, c_d):
    c_f = np.asarray(c_f)
    c_d = np.asarray(c_d)
    return (c_f + c_d) / SQRT2, (c_d - c_f) / SQRT2


def lattice_to_fd(amplitudes, n_cells: int) -> FDBasisAmplitudes:
    """Split the first ``2N`` entries of a state vector into per-cell flat/dispersive amplitudes."""
    amplitudes = np.asarray(amplitudes)
    c_f, c_d = ab_to_fd(amplitudes[:n_cells], amplitudes[n_cells : 2 * n_cells])
    return FDBasisAmplitudes(c_f=c_f, c_d=c_d)
