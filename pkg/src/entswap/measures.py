"""Predictability, l1-coherence, concurrence and the complementarity residual."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotPositive
from .qstate import DensityMatrix, PureState, partial_trace

_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def _clamp01(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def _check_1q(rho: DensityMatrix):
    if rho.qubit_count != 1:
        raise DimensionMismatch("expected a one-qubit density matrix")


def predictability(rho: DensityMatrix) -> float:
    """``|Tr(rho sigma_z)| = |rho_00 - rho_11|``."""
    _check_1q(rho)
    m = rho.entries
    return _clamp01(abs((m[0, 0] - m[1, 1]).real))


def l1_coherence(rho: DensityMatrix) -> float:
    """``2|rho_01|``, the l1-norm coherence of a qubit."""
    _check_1q(rho)
    return _clamp01(2 * abs(rho.entries[0, 1]))


def concurrence_pure(state: PureState) -> float:
    if state.qubit_count != 2:
        raise DimensionMismatch("concurrence_pure needs a two-qubit state")
    a = state.amps
    return _clamp01(2 * abs(a[0] * a[3] - a[1] * a[2]))


def concurrence_mixed(rho: DensityMatrix) -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``.

    The ``l_i`` are the singular values of ``X^T (Y x Y) X`` with
    ``rho = X X^dagger``. These coincide with the square roots of the
    eigenvalues of ``sqrt(rho) rho~ sqrt(rho)`` but avoid taking square roots
    of round-off sized eigenvalues for rank-deficient inputs.
    """
    if rho.qubit_count != 2:
        raise DimensionMismatch("concurrence_mixed needs a two-qubit density matrix")
    w, v = np.linalg.eigh(rho.entries)
    if w.min() < -1e-6:
        raise NotPositive(f"density matrix has eigenvalue {w.min():.3e}")
    w = np.where(w < 1e-14 * max(w.max(), 1.0), 0.0, w)
    x = v * np.sqrt(w)
    lam = np.linalg.svd(x.T @ _YY @ x, compute_uv=False)
    lam = np.sort(lam)[::-1]
    return _clamp01(lam[0] - lam[1] - lam[2] - lam[3])


@dataclass(frozen=True)
class MeasureTriple:
    P: float
    C: float
    E: float
    ccr_residual: float


def measure_triple(state: PureState, which_qubit: int) -> MeasureTriple:
    """(P, C, E) for one qubit of a two-qubit pure state.

    ``ccr_residual`` is ``P^2 + C^2 + E^2 - 1`` computed before clamping.
    """
    if state.qubit_count != 2:
        raise DimensionMismatch("measure_triple needs a two-qubit state")
    rho = partial_trace(state, {which_qubit}).entries
    a = state.amps
    p = abs((rho[0, 0] - rho[1, 1]).real)
    c = 2 * abs(rho[0, 1])
    e = 2 * abs(a[0] * a[3] - a[1] * a[2])
    return MeasureTriple(_clamp01(p), _clamp01(c), _clamp01(e), float(p**2 + c**2 + e**2 - 1))
