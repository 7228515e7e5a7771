"""Closed-form predictions for emitters on the cross-stitch lattice.

These are the Markovian / band-edge results that the full-lattice simulations
are checked against. None of them depends on the lattice size: band-edge
quantities enter through the coupling weight ``w = N * G**2`` (``g**2 / 2``
for a small emitter, ``2 g**2`` for a giant emitter at zero phase), the
curvature ``alpha`` and the detuning ``delta0`` of the emitter below the
dispersive band edge.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq


class Regime(str, Enum):
    SMALL_INTERSECTION = "small_intersection"
    GIANT_DISPERSIVE = "giant_dispersive"
    GIANT_FLAT = "giant_flat"
    SMALL_FLAT_DETUNED = "small_flat_detuned"


class Channel(str, Enum):
    DISPERSIVE = "dispersive"
    FLAT = "flat"


@dataclass(frozen=True)
class DecayRabiPrediction:
    gamma: float
    rabi: float
    amplitude: float
    detuning_flat: float
    detuning_edge: float
    regime: Regime


@dataclass(frozen=True)
class BoundStatePrediction:
    pole: complex
    bound_shift: float
    residue: complex
    steady_population: float
    localization_length: float
    coupling_weight: float


@dataclass(frozen=True)
class DipoleCoupling:
    strength: float
    exchange_frequency: float
    channel: Channel
    effective_coupling: float


def small_coupling_weight(g: float) -> float:
    """``N G^2`` of a small emitter: it reaches the dispersive channel with ``g / sqrt2``."""
    return 0.5 * g * g


def giant_coupling_weight(g: float) -> float:
    """``N G^2`` of a giant emitter at zero phase (dispersive coupling ``sqrt2 g``)."""
    return 2.0 * g * g


def small_effective_coupling(g: float) -> float:
    return g / math.sqrt(2.0)


def giant_effective_coupling(g: float) -> float:
    return math.sqrt(2.0) * g


def _check_velocity(v_g: float) -> float:
    v = abs(v_g)
    if v == 0.0:
        raise ValueError("zero group velocity: emitter sits at a band edge, use bound_state instead")
    return v


def small_intersection_prediction(g: float, v_g: float) -> DecayRabiPrediction:
    v = _check_velocity(v_g)
    return DecayRabiPrediction(
        gamma=g * g / (2 * v), rabi=math.sqrt(2.0) * g, amplitude=1.0,
        detuning_flat=0.0, detuning_edge=math.nan, regime=Regime.SMALL_INTERSECTION,
    )


def small_intersection_ce(g: float, v_g: float, t):
    """Excited amplitude of a small emitter resonant with the flat band and inside the dispersive band.

    ``c_e(t) = exp(-Gamma t / 2) cos(Omega t / 2)`` with ``Gamma = g^2 / (2 |v_g|)``
    and ``Omega = sqrt2 g``.
    """
    p = small_intersection_prediction(g, v_g)
    t = np.asarray(t, dtype=float)
    return (np.exp(-0.5 * p.gamma * t) * np.cos(0.5 * p.rabi * t)).astype(complex)


def giant_dispersive_rate(g: float, v_g: float) -> float:
    return 4.0 * g * g / _check_velocity(v_g)


def giant_dispersive_ce(g: float, v_g: float, t):
    """Pure exponential decay ``exp(-Gamma t / 2)``, ``Gamma = 4 g^2 / |v_g|``."""
    gamma = giant_dispersive_rate(g, v_g)
    return np.exp(-0.5 * gamma * np.asarray(t, dtype=float)).astype(complex)


def giant_flat_rabi(G: float, delta_f: float) -> float:
    return math.sqrt(delta_f * delta_f + 4.0 * G * G)


def giant_flat_ce(G: float, delta_f: float, t):
    """Detuned Rabi oscillation of a giant emitter coupled only to the flat band.

    ``G`` is the coupling to the compact localized state (``sqrt2 g`` at
    ``phase = pi``) and ``delta_f`` the flat-band detuning ``E_f - omega_e``.
    """
    t = np.asarray(t, dtype=float)
    omega = giant_flat_rabi(G, delta_f)
    if omega == 0.0:
        return np.ones_like(t, dtype=complex)
    return np.exp(0.5j * delta_f * t) * (
        np.cos(0.5 * omega * t) - 1j * (delta_f / omega) * np.sin(0.5 * omega * t)
    )


def small_flat_prediction(g: float, delta_f: float) -> DecayRabiPrediction:
    omega2 = 2 * g * g + delta_f * delta_f
    amplitude = 2 * g * g / omega2 if omega2 > 0 else 0.0
    return DecayRabiPrediction(
        gamma=0.0, rabi=math.sqrt(omega2), amplitude=amplitude,
        detuning_flat=delta_f, detuning_edge=math.nan, regime=Regime.SMALL_FLAT_DETUNED,
    )


def small_flat_population(g: float, delta_f: float, t):
    """``1 - A sin^2(Omega_f t / 2)`` with ``A = 2g^2 / (2g^2 + delta_f^2)``, ``Omega_f = sqrt(2g^2 + delta_f^2)``."""
    p = small_flat_prediction(g, delta_f)
    t = np.asarray(t, dtype=float)
    return 1.0 - p.amplitude * np.sin(0.5 * p.rabi * t) ** 2


def self_energy(s: complex, coupling_weight: float, alpha: float, delta0: float) -> complex:
    """Band-edge self-energy ``Sigma_e(s)`` of the dispersive channel.

    With a quadratic band ``delta0 + alpha k^2`` (measured from the emitter),
    ``Sigma_e(s) = -i w / (2 sqrt(alpha (delta0 - i s)))`` on the principal
    branch, which puts the cut on the band (``s = -i nu`` with ``nu >= delta0``).
    Below the band edge the value is purely imaginary.
    """
    if alpha <= 0:
        raise ValueError(f"curvature must be positive, got {alpha}")
    z = delta0 - 1j * complex(s)
    if z.imag == 0.0 and z.real <= 0.0:
        raise ValueError(f"s={s} lies on the branch cut of the self-energy")
    return -1j * coupling_weight / (2.0 * cmath.sqrt(alpha * z))


def self_energy_derivative(s: complex, coupling_weight: float, alpha: float, delta0: float) -> complex:
    z = delta0 - 1j * complex(s)
    if z.imag == 0.0 and z.real <= 0.0:
        raise ValueError(f"s={s} lies on the branch cut of the self-energy")
    return coupling_weight / (4.0 * math.sqrt(alpha) * z * cmath.sqrt(z))


def bound_state(coupling_weight: float, alpha: float, delta0: float) -> BoundStatePrediction:
    """Bound-state pole, residue and localization length below the dispersive band edge.

    The pole ``s0 = -i nu`` solves ``s0 + Sigma_e(s0) = 0``, i.e.
    ``nu = -w / (2 sqrt(alpha (delta0 - nu)))`` with ``nu < 0``. The steady
    excited population is ``|Res(s0)|^2`` with ``Res = 1 / (1 + dSigma/ds)``.
    """
    if delta0 <= 0:
        raise ValueError(f"delta0 must be positive (emitter inside the gap), got {delta0}")
    if alpha <= 0:
        raise ValueError(f"curvature must be positive, got {alpha}")
    if coupling_weight == 0.0:
        return BoundStatePrediction(0j, 0.0, 1.0 + 0j, 1.0, math.sqrt(alpha / delta0), 0.0)

    def f(nu):
        return nu + coupling_weight / (2.0 * math.sqrt(alpha * (delta0 - nu)))

    # f(0) > 0 and f(nu) ~ nu as nu -> -inf, so widening the lower end finds a sign change
    lo, hi = -2.0 * alpha, 0.0
    for _ in range(200):
        if f(lo) < 0:
            break
        lo *= 2.0
    if not (f(lo) < 0 < f(hi)):
        raise ValueError("no bound-state root in the search bracket; parameters outside the bound-state regime")
    nu = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    s0 = -1j * nu
    residue = 1.0 / (1.0 + self_energy_derivative(s0, coupling_weight, alpha, delta0))
    return BoundStatePrediction(
        pole=s0,
        bound_shift=nu,
        residue=residue,
        steady_population=abs(residue) ** 2,
        localization_length=math.sqrt(alpha / delta0),
        coupling_weight=coupling_weight,
    )


def dipole_coupling_dispersive(effective_coupling: float, alpha: float, delta0: float, separation: int) -> DipoleCoupling:
    """Exchange coupling mediated by virtual dispersive-band photons.

    ``J_d = -g_eff^2 / (2 sqrt(delta0 alpha)) exp(-sqrt(delta0 / alpha) D_a)``.
    """
    if delta0 <= 0:
        raise ValueError(f"delta0 must be positive, got {delta0}")
    if alpha <= 0:
        raise ValueError(f"curvature must be positive, got {alpha}")
    if separation < 0:
        raise ValueError(f"separation must be >= 0, got {separation}")
    strength = -(effective_coupling ** 2) / (2.0 * math.sqrt(delta0 * alpha)) * math.exp(-math.sqrt(delta0 / alpha) * separation)
    return DipoleCoupling(strength, 2.0 * abs(strength), Channel.DISPERSIVE, effective_coupling)


def dipole_coupling_flat(effective_coupling: float, delta_f: float, separation: int) -> DipoleCoupling:
    """Flat-band exchange ``-G_eff^2 / delta_f`` for emitters sharing a cell, zero otherwise."""
    if delta_f == 0:
        raise ValueError("flat-band detuning is zero; the perturbative exchange is undefined")
    if separation < 0:
        raise ValueError(f"separation must be >= 0, got {separation}")
    strength = -(effective_coupling ** 2) / delta_f if separation == 0 else 0.0
    return DipoleCoupling(strength, 2.0 * abs(strength), Channel.FLAT, effective_coupling)
