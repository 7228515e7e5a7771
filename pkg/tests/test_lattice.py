import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossstitch.lattice import (
    Boundary,
    LatticeConfig,
    SiteIndex,
    Sublattice,
    ab_to_fd,
    band_edge,
    band_structure,
    build_lattice_hamiltonian,
    dispersive_energy,
    fd_to_ab,
    group_velocity,
    k_grid,
    lattice_to_fd,
    resonant_k,
)

hops = st.floats(-3, 3, allow_nan=False).filter(lambda x: abs(x) > 1e-3)
amps = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)


def test_two_cell_matrix_folds_parallel_bonds():
    H = build_lattice_hamiltonian(LatticeConfig(2, 1.0, 0.5)).toarray()
    expected = np.array([
        [0, -2, -0.5, -2],
        [-2, 0, -2, -0.5],
        [-0.5, -2, 0, -2],
        [-2, -0.5, -2, 0],
    ])
    np.testing.assert_array_equal(H, expected)


def test_four_cell_block_pattern():
    H = build_lattice_hamiltonian(LatticeConfig(4, 1.0, 0.0)).toarray()
    HA = H[:4, :4]
    for i, j in [(0, 1), (1, 2), (2, 3), (0, 3)]:
        assert HA[i, j] == -1 and HA[j, i] == -1
    assert HA[0, 2] == 0 and np.all(np.diag(HA) == 0)
    HAB = H[:4, 4:]
    assert np.all(np.diag(HAB) == 0)
    assert HAB[0, 1] == -1 and HAB[0, 3] == -1


def test_open_boundary_drops_corner_and_rejects_corner_request():
    cfg = LatticeConfig(4, 1.0, 0.0, boundary=Boundary.OPEN)
    H = build_lattice_hamiltonian(cfg).toarray()
    assert H[0, 3] == 0 and H[0, 1] == -1
    with pytest.raises(ValueError):
        build_lattice_hamiltonian(cfg, corner_terms=True)


def test_onsite_on_diagonal():
    H = build_lattice_hamiltonian(LatticeConfig(3, 1.0, 0.2, onsite=0.7)).toarray()
    np.testing.assert_array_equal(np.diag(H), 0.7)


@pytest.mark.parametrize("n", [0, 1, 2.5])
def test_rejects_bad_cell_count(n):
    with pytest.raises(ValueError):
        LatticeConfig(n)


def test_hermitian_at_full_size():
    H = build_lattice_hamiltonian(LatticeConfig(1500, 1.0, 2.4))
    assert abs(H - H.conj().T).max() == 0


def test_site_index_bounds():
    assert SiteIndex(3, Sublattice.B).index(10) == 13
    with pytest.raises(IndexError):
        SiteIndex(10).index(10)


@pytest.mark.parametrize("J,t", [(1.0, 0.0), (1.0, -2.4), (-1.0, 1.0), (0.7, 0.3)])
def test_spectrum_matches_bands_at_64_cells(J, t):
    n = 64
    eig = np.linalg.eigvalsh(build_lattice_hamiltonian(LatticeConfig(n, J, t)).toarray())
    k = 2 * np.pi * np.arange(n) / n
    expected = np.sort(np.concatenate([np.full(n, t), -4 * J * np.cos(k) - t]))
    np.testing.assert_allclose(eig, expected, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 128), J=hops, t=st.floats(-3, 3, allow_nan=False))
def test_spectral_equivalence_property(n, J, t):
    eig = np.linalg.eigvalsh(build_lattice_hamiltonian(LatticeConfig(n, J, t)).toarray())
    k = 2 * np.pi * np.arange(n) / n
    expected = np.sort(np.concatenate([np.full(n, t), -4 * J * np.cos(k) - t]))
    np.testing.assert_allclose(eig, expected, atol=1e-9)


def test_band_values():
    cfg = LatticeConfig(16, -1.0, 1.0)
    assert dispersive_energy(cfg, 0.0) == pytest.approx(3.0)
    bands = band_structure(cfg, 64)
    assert bands.flat_energy == 1.0
    assert band_structure(LatticeConfig(16, 1.0, 2.4), 8).gap_present


@given(J=hops, t=st.floats(-5, 5, allow_nan=False), n_k=st.integers(2, 300))
def test_flatness_and_gap_predicate(J, t, n_k):
    bands = band_structure(LatticeConfig(4, J, t), n_k)
    assert np.ptp(bands.flat_energies) == 0.0
    dense = dispersive_energy(LatticeConfig(4, J, t), np.linspace(-np.pi, np.pi, 20001))
    # a crossing is resolved to within slope * step / 2 on this grid
    gap_dense = np.min(np.abs(dense - t)) > 4 * abs(J) * (2 * np.pi / 20000)
    if abs(abs(t) - 2 * abs(J)) > 1e-2:
        assert bands.gap_present == gap_dense


def test_k_grid_convention():
    k = k_grid(8)
    assert k[0] > -np.pi and k[-1] == pytest.approx(np.pi)
    assert k.size == 8 and np.all(np.diff(k) > 0)


@pytest.mark.parametrize("J,k_expected", [(1.0, 0.0), (-1.0, np.pi)])
def test_band_edge_location_and_curvature(J, k_expected):
    cfg = LatticeConfig(8, J, -2.4)
    e_min, k_min, alpha = band_edge(cfg)
    assert k_min == k_expected
    assert alpha == pytest.approx(2.0)
    assert e_min == pytest.approx(np.min(dispersive_energy(cfg, np.linspace(-np.pi, np.pi, 10001))))
    # curvature is half the second derivative at the minimum
    h = 1e-4
    second = (dispersive_energy(cfg, k_min + h) - 2 * e_min + dispersive_energy(cfg, k_min - h)) / h**2
    assert alpha == pytest.approx(0.5 * second, rel=1e-6)


def test_group_velocity_values_and_finite_difference():
    cfg = LatticeConfig(8, 1.0, 0.0)
    assert abs(group_velocity(cfg, np.pi / 2)) == pytest.approx(4.0)
    assert group_velocity(cfg, 0.0) == 0.0
    h = 1e-6
    k = np.pi / 3
    fd = (dispersive_energy(cfg, k + h) - dispersive_energy(cfg, k - h)) / (2 * h)
    assert group_velocity(cfg, k) == pytest.approx(fd, abs=1e-6)


def test_resonant_k():
    assert resonant_k(LatticeConfig(8, 1.0, 0.0), 0.0) == pytest.approx(np.pi / 2)
    assert resonant_k(LatticeConfig(8, 1.0, 2.4), 2.4) is None


@given(J=hops, t=st.floats(-3, 3, allow_nan=False), u=st.floats(-0.999, 0.999))
def test_resonant_k_round_trip(J, t, u):
    cfg = LatticeConfig(4, J, t)
    omega = -4 * J * u - t
    k = resonant_k(cfg, omega)
    assert 0 <= k <= np.pi
    assert dispersive_energy(cfg, k) == pytest.approx(omega, abs=1e-12 * max(1, abs(omega)))


def test_ab_fd_examples():
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(ab_to_fd(1, 0), (s, s))
    np.testing.assert_allclose(ab_to_fd(s, s), (0, 1), atol=1e-16)
    np.testing.assert_allclose(ab_to_fd(s, -s), (1, 0), atol=1e-16)


@given(a=amps, b=amps)
def test_ab_fd_unitary_and_invertible(a, b):
    cf, cd = ab_to_fd(a, b)
    before = abs(a) ** 2 + abs(b) ** 2
    assert abs(abs(cf) ** 2 + abs(cd) ** 2 - before) <= 1e-15 * max(before, 1)
    a2, b2 = fd_to_ab(cf, cd)
    assert abs(a2 - a) <= 1e-12 * max(abs(a), abs(b), 1)
    assert abs(b2 - b) <= 1e-12 * max(abs(a), abs(b), 1)


def test_flat_channel_is_exact_eigenmode():
    cfg = LatticeConfig(10, 1.0, -2.4)
    H = build_lattice_hamiltonian(cfg)
    fd = lattice_to_fd(np.zeros(20), 10)
    c_f = fd.c_f.copy()
    c_f[3] = 1.0
    a, b = fd_to_ab(c_f, fd.c_d)
    v = np.concatenate([a, b])
    np.testing.assert_allclose(H @ v, -2.4 * v, atol=1e-15)
