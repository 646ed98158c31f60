"""Small-dimension state vectors and density matrices.

Basis ordering is big-endian: for an ``n``-qubit state, amplitude index ``i``
encodes ``|b_{n-1} ... b_0>`` with the first listed qubit as the most
significant bit. A pair state ``|xi>_{AC}`` therefore stores ``c_{ac}`` at
index ``2*a + c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    BadIndex,
    BadSubset,
    DimensionMismatch,
    NotNormalizable,
    ZeroNorm,
)

INPUT_NORM_TOL = 1e-9
NORM_TOL = 1e-12
PHASE_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _qubit_count(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if n < 1 or 2**n != dim:
        raise DimensionMismatch(f"dimension {dim} is not a power of two >= 2")
    return n


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def canonical_phase(amps: np.ndarray) -> np.ndarray:
    """Multiply by a global phase so the first non-negligible amplitude is real and >= 0."""
    amps = np.asarray(amps, dtype=complex)
    nz = np.flatnonzero(np.abs(amps) > PHASE_TOL)
    if nz.size == 0:
        return amps.copy()
    lead = amps[nz[0]]
    out = amps * (abs(lead) / lead)
    out[nz[0]] = abs(lead)
    return out


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector over ``qubit_count`` qubits."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        _qubit_count(amps.size)
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > 1e-10:
            raise NotNormalizable(f"state norm^2 = {norm2!r}, expected 1")
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def qubit_count(self) -> int:
        return _qubit_count(self.amps.size)

    @classmethod
    def from_amplitudes(cls, amps: Iterable[complex], canonicalize: bool = True) -> "PureState":
        """Build a state from possibly slightly unnormalized user amplitudes.

        Inputs whose squared norm is within ``1e-9`` of one are renormalized;
        anything further off is rejected.
        """
        amps = np.asarray(list(amps) if not isinstance(amps, np.ndarray) else amps, dtype=complex)
        norm2 = float(np.vdot(amps, amps).real)
        if norm2 < INPUT_NORM_TOL:
            raise ZeroNorm("amplitudes have (near) zero norm")
        if abs(norm2 - 1.0) > INPUT_NORM_TOL:
            raise NotNormalizable(f"squared norm {norm2!r} deviates from 1 by more than {INPUT_NORM_TOL}")
        amps = amps / np.sqrt(norm2)
        if canonicalize:
            amps = canonical_phase(amps)
        return cls(amps)

    @classmethod
    def from_unnormalized(cls, amps: np.ndarray) -> "PureState":
        """Normalize an arbitrary nonzero vector (projection results etc.)."""
        amps = np.asarray(amps, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm**2 < 1e-300:
            raise ZeroNorm("cannot normalize a zero vector")
        return cls(canonical_phase(amps / norm))

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amps, self.amps.conj()))

    def allclose(self, other: "PureState", atol: float = 1e-12) -> bool:
        """Equality up to global phase."""
        if self.amps.shape != other.amps.shape:
            return False
        return bool(np.allclose(canonical_phase(self.amps), canonical_phase(other.amps), atol=atol, rtol=0))

    def __repr__(self):
        return f"PureState(n={self.qubit_count}, amps={np.array2string(self.amps, precision=6)})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian unit-trace matrix over ``qubit_count`` qubits."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got shape {m.shape}")
        _qubit_count(m.shape[0])
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise NotNormalizable("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-10:
            raise NotNormalizable(f"density matrix trace {tr!r} != 1")
        object.__setattr__(self, "entries", _frozen(m))

    @property
    def qubit_count(self) -> int:
        return _qubit_count(self.entries.shape[0])

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "DensityMatrix":
        """Hermitize and trace-normalize a nearly valid matrix."""
        m = np.asarray(m, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        return cls(m / np.trace(m).real)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def __repr__(self):
        return f"DensityMatrix(n={self.qubit_count})"


@dataclass(frozen=True)
class BlochVector:
    r_x: float
    r_y: float
    r_z: float

    @property
    def r(self) -> float:
        return float(np.sqrt(self.r_x**2 + self.r_y**2 + self.r_z**2))

    @property
    def theta(self) -> float:
        r = self.r
        return 0.0 if r == 0 else float(np.arccos(np.clip(self.r_z / r, -1.0, 1.0)))

    @property
    def phi(self) -> float:
        """Azimuthal angle in ``[0, 2*pi)``; zero when the transverse part vanishes."""
        if self.r_x == 0 and self.r_y == 0:
            return 0.0
        phi = float(np.arctan2(self.r_y, self.r_x)) % (2 * np.pi)
        return 0.0 if phi >= 2 * np.pi else phi


def make_state(amps: Iterable[complex]) -> PureState:
    return PureState.from_amplitudes(amps)


def make_pair_state(c00: complex, c01: complex, c10: complex, c11: complex) -> PureState:
    """Two-qubit state ``c00|00> + c01|01> + c10|10> + c11|11>``."""
    return PureState.from_amplitudes([c00, c01, c10, c11])


def basis_state(bits: str) -> PureState:
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return PureState(amps)


def tensor(a: PureState, b: PureState) -> PureState:
    """Kronecker product; qubit order is a's qubits followed by b's."""
    return PureState(np.kron(a.amps, b.amps))


def partial_trace(rho_or_state: PureState | DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix on the qubits in ``keep`` (kept in ascending order)."""
    n = rho_or_state.qubit_count
    keep = sorted(set(int(k) for k in keep))
    if not keep or len(keep) >= n or keep[0] < 0 or keep[-1] >= n:
        raise BadSubset(f"keep={keep} must be a nonempty strict subset of range({n})")
    traced = [q for q in range(n) if q not in keep]
    k = len(keep)
    if isinstance(rho_or_state, PureState):
        psi = rho_or_state.amps.reshape((2,) * n).transpose(keep + traced)
        psi = psi.reshape(2**k, 2 ** (n - k))
        red = psi @ psi.conj().T
    else:
        t = rho_or_state.entries.reshape((2,) * (2 * n))
        t = t.transpose(keep + traced + [n + q for q in keep] + [n + q for q in traced])
        t = t.reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k))
        red = np.einsum("ajbj->ab", t)
    return DensityMatrix(0.5 * (red + red.conj().T))


def bloch_of(rho: DensityMatrix) -> BlochVector:
    if rho.qubit_count != 1:
        raise DimensionMismatch("bloch_of needs a one-qubit density matrix")
    m = rho.entries
    return BlochVector(
        r_x=float(2 * m[0, 1].real),
        r_y=float(-2 * m[0, 1].imag),
        r_z=float((m[0, 0] - m[1, 1]).real),
    )


def apply_1q(state: PureState, qubit: int, gate: np.ndarray, canonicalize: bool = True) -> PureState:
    """Apply a 2x2 unitary to one qubit."""
    n = state.qubit_count
    if not 0 <= qubit < n:
        raise BadIndex(f"qubit {qubit} out of range for {n}-qubit state")
    psi = state.amps.reshape((2,) * n)
    psi = np.moveaxis(np.tensordot(gate, psi, axes=([1], [qubit])), 0, qubit).reshape(-1)
    return PureState(canonical_phase(psi) if canonicalize else psi)


def rz(alpha: float) -> np.ndarray:
    """``R_z(alpha) = diag(exp(-i alpha/2), exp(+i alpha/2))``."""
    return np.diag([np.exp(-0.5j * alpha), np.exp(0.5j * alpha)])


def apply_rz(state: PureState, qubit: int, phi: float) -> PureState:
    """Apply ``R_z(-phi) = exp(i phi sigma_z / 2)`` to ``qubit``.

    With this sign, rotating a qubit by its own Bloch azimuth ``phi`` brings
    its transverse Bloch component onto the +x axis.
    """
    return apply_1q(state, qubit, rz(-phi))


def haar_random_pure(n_qubits: int, seed: int | np.random.Generator) -> PureState:
    """Haar-distributed pure state from normalized complex Gaussians."""
    if n_qubits < 1:
        raise DimensionMismatch("n_qubits must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dim = 2**n_qubits
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState.from_unnormalized(z)


def haar_random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """QR of a complex Ginibre matrix with the phase fix (Mezzadri)."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def pure_with_marginal(bloch: BlochVector, qubit: int, partner: np.ndarray | None = None) -> PureState:
    """Two-qubit pure state whose ``qubit`` marginal has the given Bloch vector.

    Built as a Schmidt decomposition ``sum_k sqrt(l_k) |u_k>|a_k>``; ``partner``
    is a 2x2 unitary whose columns supply the partner-qubit Schmidt vectors.
    """
    r = bloch.r
    if r > 1 + 1e-12:
        raise NotNormalizable(f"Bloch radius {r} exceeds 1")
    rho = 0.5 * (IDENTITY + bloch.r_x * SIGMA_X + bloch.r_y * SIGMA_Y + bloch.r_z * SIGMA_Z)
    w, u = np.linalg.eigh(rho)
    w = np.clip(w, 0, None)
    partner = IDENTITY if partner is None else np.asarray(partner, dtype=complex)
    m = sum(np.sqrt(w[k]) * np.outer(u[:, k], partner[:, k]) for k in range(2))
    # m is indexed [marginal, partner]
    amps = m.reshape(-1) if qubit == 0 else m.T.reshape(-1)
    return PureState.from_unnormalized(amps)
