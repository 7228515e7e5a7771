import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossstitch.dynamics import (
    EmitterKind,
    EmitterSpec,
    PropagationError,
    SystemState,
    assemble_system,
    emitter_frequency,
    evolve,
    field_profile,
    populations,
    stationary_component,
    two_emitter_scenario,
)
from crossstitch.lattice import LatticeConfig, SiteIndex, Sublattice
from crossstitch.propagators import ChebyshevPropagator, DenseEigenPropagator, gershgorin_bounds


def _nonzero_offdiag(H, row):
    r = H.getrow(row).toarray().ravel()
    r[row] = 0
    return np.nonzero(r)[0], r


def test_small_emitter_entries():
    n = 1500
    system = assemble_system(LatticeConfig(n, 1.0, 0.0), [EmitterSpec.small(0.0, 0.3, n // 2)])
    idx, row = _nonzero_offdiag(system.matrix, system.emitter_index(0))
    assert list(idx) == [n // 2]
    assert abs(row[n // 2]) == pytest.approx(0.3)
    col = system.matrix.getcol(system.emitter_index(0)).toarray().ravel()
    assert np.count_nonzero(col) == 1  # diagonal frequency is zero here


def test_giant_phase_pi_entry_is_minus_g():
    n = 20
    system = assemble_system(LatticeConfig(n, 1.0, 0.0), [EmitterSpec.giant(-1.0, 0.1, 5, phase=math.pi)])
    e = system.emitter_index(0)
    H = system.matrix
    assert H[n + 5, e] == -0.1 + 0j
    assert H[5, e] == 0.1
    assert H[e, e] == -1.0


def test_structure_at_full_size_with_two_emitters():
    n = 1500
    lat = LatticeConfig(n, 1.0, -2.4)
    system, state = two_emitter_scenario(lat, EmitterSpec.giant(-1.8, 0.05, 750), EmitterSpec.giant(-1.8, 0.05, 0), 6)
    H = system.matrix
    assert abs(H - H.conj().T).max() <= 1e-12
    assert system.dimension == 2 * n + 2
    for q, cell in [(0, 750), (1, 756)]:
        idx, _ = _nonzero_offdiag(H, system.emitter_index(q))
        assert list(idx) == [cell, n + cell]
    assert state.emitter_amplitudes[0] == 1 and state.emitter_amplitudes[1] == 0


def test_shared_attachment_allowed():
    lat = LatticeConfig(10, 1.0, -2.4)
    spec = EmitterSpec.giant(-1.9, 0.05, 4, phase=math.pi)
    system, _ = two_emitter_scenario(lat, spec, spec, 0)
    H = system.matrix.toarray()
    c1, c2 = H[:20, 20], H[:20, 21]
    np.testing.assert_array_equal(c1, c2)


def test_out_of_range_placement():
    lat = LatticeConfig(10, 1.0, 0.0)
    with pytest.raises(ValueError):
        two_emitter_scenario(lat, EmitterSpec.small(0, 0.1, 8), EmitterSpec.small(0, 0.1, 0), 3)
    with pytest.raises(IndexError):
        assemble_system(lat, [EmitterSpec.small(0, 0.1, 10)])


@pytest.mark.parametrize("kwargs", [
    dict(kind="small", frequency=0, coupling=-0.1, attach_a=SiteIndex(0)),
    dict(kind="small", frequency=0, coupling=0.1, attach_a=SiteIndex(0), attach_b=SiteIndex(0, Sublattice.B)),
    dict(kind="giant", frequency=0, coupling=0.1, attach_a=SiteIndex(0)),
    dict(kind="giant", frequency=0, coupling=0.1, attach_a=SiteIndex(0), attach_b=SiteIndex(1, Sublattice.A)),
])
def test_emitter_validation(kwargs):
    with pytest.raises(ValueError):
        EmitterSpec(**kwargs)


def test_decoupled_emitter_stays_excited():
    system = assemble_system(LatticeConfig(50, 1.0, 0.0), [EmitterSpec.small(0.3, 0.0, 25)])
    traj = evolve(system, system.excited(0), np.linspace(0, 100, 201))
    np.testing.assert_allclose(traj.emitter_pops[:, 0], 1.0, atol=1e-14)


def test_intra_cell_rabi():
    t_hop = 0.5
    lat = LatticeConfig(6, 0.0, t_hop)
    system = assemble_system(lat, [EmitterSpec.small(0.0, 0.0, 0)])
    psi = np.zeros(system.dimension, complex)
    psi[system.site_index(SiteIndex(2, Sublattice.A))] = 1
    snaps = np.linspace(0, 4 * np.pi, 41)
    traj = evolve(system, SystemState(psi, 0.0, 6), snaps, snapshot_times=snaps)
    pa = np.array([field_profile(traj.snapshots[t])[0][2] for t in snaps])
    # two-site oscillation: |a|^2 = cos^2(t_hop * t), population frequency 2|t|
    np.testing.assert_allclose(pa, np.cos(t_hop * snaps) ** 2, atol=1e-12)
    assert pa.max() - pa.min() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("lat,emitters", [
    (LatticeConfig(8, 1.0, 0.0), [EmitterSpec.small(0.0, 0.3, 3)]),
    (LatticeConfig(6, -1.0, 0.7), [EmitterSpec.giant(0.2, 0.4, 1, phase=0.9)]),
    (LatticeConfig(7, 1.0, -2.4), [EmitterSpec.giant(-1.9, 0.2, 2, phase=math.pi), EmitterSpec.small(-1.9, 0.2, 5)]),
    (LatticeConfig(5, 0.6, 0.1, boundary="open"), [EmitterSpec.small(1.0, 0.5, 0)]),
])
def test_chebyshev_matches_dense_small_n(lat, emitters):
    system = assemble_system(lat, emitters)
    times = np.arange(0, 300.0001, 0.75)
    cheb = evolve(system, system.excited(0), times)
    dense = evolve(system, system.excited(0), times, method="dense")
    assert np.max(np.abs(cheb.emitter_amplitudes - dense.emitter_amplitudes)) <= 1e-9
    assert cheb.norm_drift <= 1e-8 and cheb.energy_drift <= 1e-8


def test_chebyshev_step_against_expm():
    from scipy.linalg import expm

    system = assemble_system(LatticeConfig(5, 1.0, 0.3), [EmitterSpec.giant(0.1, 0.3, 2, phase=1.1)])
    H = system.matrix
    lo, hi = gershgorin_bounds(H)
    ev = np.linalg.eigvalsh(H.toarray())
    assert lo <= ev.min() and ev.max() <= hi
    psi = system.excited(0).amplitudes
    for dt in (0.1, 2.0, 17.0):
        out = ChebyshevPropagator(H, dt).step(psi)
        np.testing.assert_allclose(out, expm(-1j * dt * H.toarray()) @ psi, atol=1e-12)
    dense = DenseEigenPropagator(H).propagate(psi, [0.0, 2.0])
    np.testing.assert_allclose(dense[1], expm(-2j * H.toarray()) @ psi, atol=1e-12)


def test_boundary_independence():
    # front speed 4|J| = 4 reaches the edge of 120 cells (60 each side) only after t = 15
    em = lambda n: [EmitterSpec.small(0.0, 0.3, n // 2)]  # noqa: E731
    times = np.arange(0, 12.0001, 0.1)
    traj = {}
    for n in (120, 240):
        system = assemble_system(LatticeConfig(n, 1.0, 0.0), em(n))
        traj[n] = evolve(system, system.excited(0), times).emitter_pops[:, 0]
    np.testing.assert_allclose(traj[120], traj[240], atol=1e-6)


@settings(max_examples=15, deadline=None)
@given(phi=st.sampled_from([0.0, 0.5 * math.pi, math.pi, 2.5, -math.pi, 1.5 * math.pi]))
def test_phase_covariance_bit_identical(phi):
    lat = LatticeConfig(16, 1.0, -2.4)
    times = np.arange(0, 50.0001, 0.5)
    out = []
    for p in (phi, phi + 2 * math.pi):
        system = assemble_system(lat, [EmitterSpec.giant(-1.9, 0.2, 8, phase=p)])
        out.append(evolve(system, system.excited(0), times).emitter_amplitudes)
    assert np.array_equal(out[0], out[1])


@settings(max_examples=15, deadline=None)
@given(phi=st.floats(-10, 10, allow_nan=False))
def test_phase_covariance_any_phase(phi):
    a = EmitterSpec.giant(0, 1, 0, phase=phi).phase_factor()
    b = EmitterSpec.giant(0, 1, 0, phase=phi + 2 * math.pi).phase_factor()
    assert abs(a - b) <= 1e-12
    assert abs(a - complex(math.cos(phi), math.sin(phi))) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(
    g=st.floats(0, 1), omega=st.floats(-3, 3), t=st.floats(-3, 3), phi=st.floats(0, 2 * math.pi),
    giant=st.booleans(),
)
def test_norm_and_population_sum(g, omega, t, phi, giant):
    lat = LatticeConfig(12, 1.0, t)
    spec = EmitterSpec.giant(omega, g, 6, phase=phi) if giant else EmitterSpec.small(omega, g, 6)
    system = assemble_system(lat, [spec])
    traj = evolve(system, system.excited(0), np.arange(0, 40.0001, 0.5), monitor_cells=[6])
    pe, p0, pd = populations(traj, 6)
    assert np.max(np.abs(pe + p0 + pd - 1)) <= 1e-6
    assert traj.norm_drift <= 1e-8
    assert (pe[0], p0[0], pd[0]) == (1.0, 0.0, 0.0)


def test_populations_requires_monitored_cell():
    system = assemble_system(LatticeConfig(8, 1.0, 0.0), [EmitterSpec.small(0, 0.3, 4)])
    traj = evolve(system, system.excited(0), np.arange(0, 5.0001, 0.5), monitor_cells=[4])
    with pytest.raises(ValueError):
        populations(traj, 3)


def test_vacuum_profile_and_symmetric_giant_profile():
    system = assemble_system(LatticeConfig(40, 1.0, -2.4), [EmitterSpec.giant(-1.9, 0.1, 20)])
    pa, pb = field_profile(system.excited(0))
    assert not pa.any() and not pb.any()
    traj = evolve(system, system.excited(0), np.arange(0, 30.0001, 0.5), snapshot_times=[30.0])
    state = traj.snapshots[30.0]
    pa, pb = field_profile(state)
    np.testing.assert_allclose(pa, pb, atol=1e-8)
    assert pa.sum() + pb.sum() + np.sum(np.abs(state.emitter_amplitudes) ** 2) == pytest.approx(1.0, abs=1e-10)


def test_evolve_input_checks():
    system = assemble_system(LatticeConfig(8, 1.0, 0.0), [EmitterSpec.small(0, 0.3, 4)])
    with pytest.raises(ValueError):
        evolve(system, system.excited(0), [1.0, 2.0])
    with pytest.raises(ValueError):
        evolve(system, SystemState(2 * system.excited(0).amplitudes, 0.0, 8), [0.0, 1.0])
    with pytest.raises(ValueError):
        evolve(system, system.excited(0), [0.0, 1.0], snapshot_times=[5.0])


def test_norm_violation_raises_with_diagnostics():
    system = assemble_system(LatticeConfig(8, 1.0, 0.0), [EmitterSpec.small(0, 0.3, 4)])
    with pytest.raises(PropagationError) as info:
        evolve(system, system.excited(0), np.arange(0, 50.0001, 0.5), norm_tol=1e-18)
    assert "horizon" in info.value.diagnostics


def test_stationary_component_recovers_bound_eigenvector():
    lat = LatticeConfig(200, 1.0, -2.4)
    system = assemble_system(lat, [EmitterSpec.giant(-1.9, 0.1, 100)])
    times = np.arange(0, 600.0001, 0.5)
    traj = evolve(system, system.excited(0), times, snapshot_times=[600.0])
    energy = emitter_frequency(traj)
    evals, evecs = np.linalg.eigh(system.matrix.toarray())
    j = np.argmin(np.abs(evals - energy))
    assert energy == pytest.approx(evals[j], abs=1e-4)
    bound = stationary_component(system, traj.snapshots[600.0], energy, 1500.0)
    overlap = abs(np.vdot(evecs[:, j], bound.amplitudes)) / np.linalg.norm(bound.amplitudes)
    assert overlap == pytest.approx(1.0, abs=1e-4)
    assert EmitterKind.GIANT is system.emitters[0].kind
