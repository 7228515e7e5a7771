"""Time-independent Schrödinger propagators.

``ChebyshevPropagator`` expands ``exp(-i H dt)`` in Chebyshev polynomials of the
rescaled Hamiltonian and only needs sparse matrix-vector products, so it is
the workhorse for the ``2N + Q`` systems. ``DenseEigenPropagator`` diagonalises
``H`` once and is exact up to round-off; it serves as the reference for small
systems.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.special import jv


def gershgorin_bounds(H) -> tuple[float, float]:
    """Interval containing the spectrum of the Hermitian matrix ``H``."""
    H = sp.csr_matrix(H)
    diag = H.diagonal().real
    radius = np.asarray(abs(H).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - radius)), float(np.max(diag + radius))


class ChebyshevPropagator:
    """Fixed-step propagator ``psi -> exp(-i H dt) psi``.

    Parameters
    ----------
    H : sparse or dense Hermitian matrix
    dt : float
        Step length.
    tol : float
        Expansion terms are dropped once the Bessel coefficients fall below
        ``tol``; the default sits at double-precision round-off.
    """

    def __init__(self, H, dt: float, tol: float = 1e-16):
        if dt <= 0:
            raise ValueError(f"step must be positive, got {dt}")
        self.H = sp.csr_matrix(H, dtype=complex)
        self.dt = float(dt)
        e_min, e_max = gershgorin_bounds(self.H)
        # widen slightly so the rescaled spectrum stays strictly inside [-1, 1]
        span = max(e_max - e_min, 1e-12)
        self.center = 0.5 * (e_max + e_min)
        self.half_width = 0.5 * span * (1 + 1e-6) + 1e-12
        self.coefficients = self._coefficients(self.half_width * self.dt, tol)
        self.phase = np.exp(-1j * self.center * self.dt)

    @staticmethod
    def _coefficients(x: float, tol: float) -> np.ndarray:
        # J_k(x) decays super-exponentially once k exceeds x
        k_max = int(x + 20 * np.cbrt(max(x, 1.0)) + 30)
        orders = np.arange(k_max + 1)
        bessel = jv(orders, x)
        tail = np.abs(bessel) > tol
        tail[: int(np.ceil(x)) + 1] = True
        n_terms = int(np.nonzero(tail)[0].max()) + 1
        coeff = 2.0 * (-1j) ** orders[:n_terms] * bessel[:n_terms]
        coeff[0] *= 0.5
        return coeff

    @property
    def n_terms(self) -> int:
        return self.coefficients.size

    def _apply_scaled(self, v):
        return (self.H @ v - self.center * v) / self.half_width

    def step(self, psi: np.ndarray) -> np.ndarray:
        coeff = self.coefficients
        w_prev = psi
        result = coeff[0] * w_prev
        if coeff.size == 1:
            return self.phase * result
        w = self._apply_scaled(psi)
        result = result + coeff[1] * w
        for c in coeff[2:]:
            w_prev, w = w, 2.0 * self._apply_scaled(w) - w_prev
            result += c * w
        return self.phase * result


class DenseEigenPropagator:
    """Exact propagation through the eigendecomposition of a dense ``H``."""

    def __init__(self, H):
        H = H.toarray() if sp.issparse(H) else np.asarray(H)
        self.energies, self.vectors = np.linalg.eigh(H)

    def propagate(self, psi0: np.ndarray, times) -> np.ndarray:
        """Amplitudes at every time, shape ``(len(times), dim)``."""
        times = np.asarray(times, dtype=float)
        weights = self.vectors.conj().T @ np.asarray(psi0, dtype=complex)
        phases = np.exp(-1j * np.outer(times, self.energies))
        return (phases * weights) @ self.vectors.T
