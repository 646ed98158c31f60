"""Finite-shot measurement emulation, readout mitigation and Pauli tomography.

Readout is modelled as independent per-qubit bit flips. Mitigation uses a
calibration matrix whose columns are the measured outcome distributions of
the computational basis states; tomography is linear inversion followed by
a projection onto the physical set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import nnls

from .errors import BadBasis, DimensionMismatch, MissingBasis, OutOfRange, Singular
from .qstate import HADAMARD, IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, DensityMatrix, PureState
from .swap import OUTCOMES, BellOutcome

DEFAULT_SHOTS = 8192
DEFAULT_EPS01 = 0.02
DEFAULT_EPS10 = 0.04
SHOT_FLOOR = 50

PAULIS = {"I": IDENTITY, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}
SETTINGS_1Q = ("X", "Y", "Z")
SETTINGS_2Q = tuple(a + b for a, b in itertools.product("XYZ", repeat=2))

_S_DAG = np.diag([1, -1j])
_BASIS_CHANGE = {"Z": IDENTITY, "I": IDENTITY, "X": HADAMARD, "Y": HADAMARD @ _S_DAG}


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for ``(seed, key...)``; the splitting rule for sub-tasks."""
    return np.random.default_rng([int(seed), *[int(k) for k in keys]])


@dataclass(frozen=True)
class ReadoutNoise:
    """Per-qubit bit-flip probabilities: ``eps01`` reads a true 0 as 1, ``eps10`` a true 1 as 0.

    Scalars apply to every qubit.
    """

    eps01: float | tuple[float, ...] = DEFAULT_EPS01
    eps10: float | tuple[float, ...] = DEFAULT_EPS10

    def __post_init__(self):
        for v in np.atleast_1d(self.eps01).tolist() + np.atleast_1d(self.eps10).tolist():
            if not 0 <= v < 0.5:
                raise OutOfRange(f"readout flip probability {v} outside [0, 0.5)")

    @classmethod
    def none(cls) -> "ReadoutNoise":
        return cls(0.0, 0.0)

    def per_qubit(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        e01 = np.broadcast_to(np.asarray(self.eps01, dtype=float), (n,)).copy()
        e10 = np.broadcast_to(np.asarray(self.eps10, dtype=float), (n,)).copy()
        return e01, e10

    def confusion(self, n: int) -> np.ndarray:
        """Exact column-stochastic readout matrix ``M[read, true]``."""
        e01, e10 = self.per_qubit(n)
        m = np.ones((1, 1))
        for a, b in zip(e01, e10):
            m = np.kron(m, np.array([[1 - a, b], [a, 1 - b]]))
        return m


@dataclass(frozen=True)
class CountsTable:
    basis_label: str
    counts: dict[str, int]
    shots: int

    @property
    def n_qubits(self) -> int:
        return len(next(iter(self.counts))) if self.counts else len(self.basis_label)

    @classmethod
    def from_indices(cls, basis_label: str, idx: np.ndarray, n: int) -> "CountsTable":
        hist = np.bincount(idx, minlength=2**n)
        counts = {format(i, f"0{n}b"): int(c) for i, c in enumerate(hist) if c}
        return cls(basis_label, counts, int(len(idx)))

    def frequencies(self) -> np.ndarray:
        n = len(self.basis_label)
        p = np.zeros(2**n)
        for bits, c in self.counts.items():
            p[int(bits, 2)] = c
        return p / self.shots if self.shots else p


@dataclass(frozen=True)
class CalibrationMatrix:
    M: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(self.M.shape[0]).bit_length() - 1


def _check_basis(basis: str, n: int):
    if len(basis) != n:
        raise BadBasis(f"basis '{basis}' has length {len(basis)}, state has {n} qubits")
    bad = set(basis) - set("XYZI")
    if bad:
        raise BadBasis(f"unknown Pauli letters {sorted(bad)} in '{basis}'")


def rotate_to_basis(amps: np.ndarray, basis: str) -> np.ndarray:
    """Apply the per-qubit basis change so a Z readout measures ``basis``."""
    n = len(basis)
    psi = np.asarray(amps, dtype=complex).reshape((2,) * n)
    for q, letter in enumerate(basis):
        if letter in "XY":
            psi = np.moveaxis(np.tensordot(_BASIS_CHANGE[letter], psi, axes=([1], [q])), 0, q)
    return psi.reshape(-1)


def born_probabilities(state: PureState, basis: str) -> np.ndarray:
    _check_basis(basis, state.qubit_count)
    p = np.abs(rotate_to_basis(state.amps, basis)) ** 2
    return p / p.sum()


def exact_distribution(state: PureState, basis: str, noise: ReadoutNoise | None = None) -> np.ndarray:
    """Infinite-shot outcome distribution, including readout noise."""
    p = born_probabilities(state, basis)
    if noise is None:
        return p
    return noise.confusion(state.qubit_count) @ p


def _apply_readout(idx: np.ndarray, n: int, noise: ReadoutNoise | None, rng: np.random.Generator) -> np.ndarray:
    if noise is None:
        return idx
    e01, e10 = noise.per_qubit(n)
    if not (e01.any() or e10.any()):
        return idx
    shifts = n - 1 - np.arange(n)
    bits = (idx[:, None] >> shifts) & 1
    flip_p = np.where(bits == 0, e01, e10)
    bits = bits ^ (rng.random(bits.shape) < flip_p)
    return (bits << shifts).sum(axis=1)


def sample_indices(probs: np.ndarray, shots: int, noise: ReadoutNoise | None, rng: np.random.Generator) -> np.ndarray:
    """Shot-level outcome indices: Born sampling, then independent readout flips."""
    n = int(len(probs)).bit_length() - 1
    probs = np.clip(probs, 0, None)
    idx = rng.choice(len(probs), size=shots, p=probs / probs.sum())
    return _apply_readout(idx, n, noise, rng)


def sample_measurement(
    state: PureState,
    basis: str,
    shots: int,
    noise: ReadoutNoise | None = None,
    seed: int | np.random.Generator = 0,
) -> CountsTable:
    if shots < 1:
        raise OutOfRange("shots must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = sample_indices(born_probabilities(state, basis), shots, noise, rng)
    return CountsTable.from_indices(basis, idx, state.qubit_count)


def build_calibration(
    noise: ReadoutNoise | None,
    n_qubits: int,
    shots_per_basis_state: int | None = DEFAULT_SHOTS,
    seed: int = 0,
) -> CalibrationMatrix:
    """Calibration matrix from preparing and reading out every basis state.

    ``shots_per_basis_state=None`` gives the infinite-shot (exact) matrix.
    """
    dim = 2**n_qubits
    if shots_per_basis_state is None:
        m = (noise or ReadoutNoise.none()).confusion(n_qubits)
        return CalibrationMatrix(m)
    m = np.zeros((dim, dim))
    for j in range(dim):
        rng = derive_rng(seed, j)
        idx = _apply_readout(np.full(shots_per_basis_state, j), n_qubits, noise, rng)
        m[:, j] = np.bincount(idx, minlength=dim) / shots_per_basis_state
    return CalibrationMatrix(m)


def mitigate(counts: CountsTable | np.ndarray, M: CalibrationMatrix) -> np.ndarray:
    """Corrected probabilities solving ``M p = p_raw`` with ``p >= 0`` and ``sum(p) = 1``."""
    p_raw = counts.frequencies() if isinstance(counts, CountsTable) else np.asarray(counts, dtype=float)
    m = M.M
    if m.shape != (p_raw.size, p_raw.size):
        raise DimensionMismatch(f"calibration {m.shape} vs {p_raw.size} outcomes")
    if np.linalg.cond(m) > 1e12:
        raise Singular("calibration matrix is numerically rank-deficient")
    p = np.linalg.solve(m, p_raw)
    if p.min() >= 0:
        return p / p.sum()
    # inverse left the simplex: weighted row pins the sum while NNLS keeps p >= 0
    w = 1e3
    a = np.vstack([m, w * np.ones(m.shape[1])])
    b = np.append(p_raw, w * p_raw.sum())
    p, _ = nnls(a, b)
    return p / p.sum()


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def pauli_expectation(probs: np.ndarray, support: Sequence[int]) -> float:
    """``<prod_{q in support} Z_q>`` for a distribution over big-endian bitstrings."""
    n = int(len(probs)).bit_length() - 1
    idx = np.arange(len(probs))
    parity = np.zeros(len(probs), dtype=int)
    for q in support:
        parity ^= (idx >> (n - 1 - q)) & 1
    return float(np.dot(probs, 1 - 2 * parity))


def project_physical(m: np.ndarray) -> DensityMatrix:
    """Closest density matrix in Frobenius norm to a unit-trace Hermitian estimate.

    Negative eigenvalues are clamped to zero and their weight is removed
    evenly from the remaining ones (Smolin, Gambetta and Smith, PRL 108,
    070502). A matrix that is already positive passes through unchanged.
    """
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    w = w / w.sum()
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    lam = w.copy()
    acc = 0.0
    i = len(w) - 1
    while i >= 0 and lam[i] + acc / (i + 1) < 0:
        acc += lam[i]
        lam[i] = 0.0
        i -= 1
    lam[: i + 1] += acc / (i + 1)
    return DensityMatrix.from_matrix((v * lam) @ v.conj().T)


def _distributions(data: Mapping[str, CountsTable | np.ndarray], calibration: CalibrationMatrix | None):
    out = {}
    for k, v in data.items():
        if calibration is not None:
            out[k] = mitigate(v, calibration)
        else:
            out[k] = v.frequencies() if isinstance(v, CountsTable) else np.asarray(v, dtype=float)
    return out


def tomography_1q(
    data: Mapping[str, CountsTable | np.ndarray], calibration: CalibrationMatrix | None = None
) -> DensityMatrix:
    """Linear-inversion qubit tomography from X, Y and Z settings."""
    missing = [s for s in SETTINGS_1Q if s not in data]
    if missing:
        raise MissingBasis(f"missing settings {missing}")
    dist = _distributions({s: data[s] for s in SETTINGS_1Q}, calibration)
    rho = 0.5 * IDENTITY.copy()
    for s in SETTINGS_1Q:
        rho = rho + 0.5 * pauli_expectation(dist[s], [0]) * PAULIS[s]
    return project_physical(rho)


def tomography_2q(
    data: Mapping[str, CountsTable | np.ndarray], calibration: CalibrationMatrix | None = None
) -> DensityMatrix:
    """Linear-inversion two-qubit tomography from the nine settings in {X,Y,Z}^2.

    Single-qubit expectations are averaged over every setting that measures
    that qubit in the required basis.
    """
    missing = [s for s in SETTINGS_2Q if s not in data]
    if missing:
        raise MissingBasis(f"missing settings {missing}")
    dist = _distributions({s: data[s] for s in SETTINGS_2Q}, calibration)
    rho = np.zeros((4, 4), dtype=complex)
    for a, b in itertools.product("IXYZ", repeat=2):
        if a == "I" and b == "I":
            ev = 1.0
        elif b == "I":
            ev = np.mean([pauli_expectation(dist[a + x], [0]) for x in "XYZ"])
        elif a == "I":
            ev = np.mean([pauli_expectation(dist[x + b], [1]) for x in "XYZ"])
        else:
            ev = pauli_expectation(dist[a + b], [0, 1])
        rho += 0.25 * ev * np.kron(PAULIS[a], PAULIS[b])
    return project_physical(rho)


def _inverse_bell_transform(amps: np.ndarray) -> np.ndarray:
    """CNOT(C -> C') then H on C, for a 4-qubit vector ordered (A, C, C', B)."""
    psi = np.array(amps, dtype=complex).reshape(2, 2, 2, 2)
    psi[:, 1] = psi[:, 1, ::-1].copy()
    psi = np.moveaxis(np.tensordot(HADAMARD, psi, axes=([1], [1])), 0, 1)
    return psi.reshape(-1)


def _full_label(ab_setting: str) -> str:
    return ab_setting[0] + "ZZ" + ab_setting[1]


def bell_circuit_probabilities(global_state: PureState, ab_setting: str = "ZZ") -> np.ndarray:
    """Born distribution over (A, C, C', B) bits after the Bell transform and AB basis change."""
    if global_state.qubit_count != 4:
        raise DimensionMismatch("expected a 4-qubit state ordered (A, C, C', B)")
    _check_basis(ab_setting, 2)
    amps = rotate_to_basis(_inverse_bell_transform(global_state.amps), _full_label(ab_setting))
    p = np.abs(amps) ** 2
    return p / p.sum()


def _outcome_index_of(idx: np.ndarray) -> np.ndarray:
    # bits of C and C' sit at positions 2 and 1 of a 4-bit big-endian index
    return (idx >> 1) & 0b11


def _ab_index_of(idx: np.ndarray) -> np.ndarray:
    return ((idx >> 3) & 1) << 1 | (idx & 1)


def bell_outcome_distribution(global_state: PureState, route: str = "transform") -> dict[BellOutcome, float]:
    """Exact BBM outcome probabilities via the basis change or via Bell projectors."""
    if global_state.qubit_count != 4:
        raise DimensionMismatch("expected a 4-qubit state ordered (A, C, C', B)")
    if route == "transform":
        p = bell_circuit_probabilities(global_state).reshape(2, 2, 2, 2).sum(axis=(0, 3)).reshape(-1)
        return {BellOutcome.from_bits(format(i, "02b")): float(p[i]) for i in range(4)}
    if route == "projector":
        psi = global_state.amps.reshape(2, 2, 2, 2)
        out = {}
        for o in OUTCOMES:
            ab = np.einsum("acdb,cd->ab", psi, o.vector.conj().reshape(2, 2))
            out[o] = float(np.sum(np.abs(ab) ** 2))
        return out
    raise ValueError(f"unknown route {route!r}")


def conditional_ab(dist4: np.ndarray) -> tuple[dict[BellOutcome, float], dict[BellOutcome, np.ndarray | None]]:
    """Split a 4-qubit distribution into BBM outcome weights and conditional AB distributions."""
    t = np.asarray(dist4).reshape(2, 2, 2, 2)  # A, C, C', B
    weights, cond = {}, {}
    for o in OUTCOMES:
        c, cp = int(o.bits[0]), int(o.bits[1])
        ab = t[:, c, cp, :].reshape(-1)
        w = float(ab.sum())
        weights[o] = w
        cond[o] = ab / w if w > 0 else None
    return weights, cond


@dataclass
class BellPostSelection:
    """Shots of the BBM circuit, one run per AB tomography setting.

    ``records[setting]`` holds the shot-level 4-bit outcome indices (after
    readout noise); ``groups[outcome][setting]`` the post-selected AB counts.
    """

    shots: int
    records: dict[str, np.ndarray]
    groups: dict[BellOutcome, dict[str, CountsTable]] = field(default_factory=dict)

    @property
    def outcome_counts(self) -> dict[BellOutcome, int]:
        return {o: sum(t.shots for t in self.groups[o].values()) for o in OUTCOMES}

    @property
    def total_shots(self) -> int:
        return sum(len(r) for r in self.records.values())

    def outcome_frequencies(self) -> dict[BellOutcome, float]:
        tot = self.total_shots
        return {o: c / tot for o, c in self.outcome_counts.items()}

    def low_statistics(self, floor: int = SHOT_FLOOR) -> dict[BellOutcome, bool]:
        return {o: min(t.shots for t in self.groups[o].values()) < floor for o in OUTCOMES}

    def raw_counts(self, setting: str) -> CountsTable:
        return CountsTable.from_indices(_full_label(setting), self.records[setting], 4)


def _group(records: Mapping[str, np.ndarray]) -> dict[BellOutcome, dict[str, CountsTable]]:
    groups = {o: {} for o in OUTCOMES}
    for setting, idx in records.items():
        oi = _outcome_index_of(idx)
        ab = _ab_index_of(idx)
        for o in OUTCOMES:
            groups[o][setting] = CountsTable.from_indices(setting, ab[oi == int(o.bits, 2)], 2)
    return groups


def bell_measure_and_postselect(
    global_state: PureState,
    shots: int,
    noise: ReadoutNoise | None = None,
    seed: int = 0,
    settings: Sequence[str] = SETTINGS_2Q,
) -> BellPostSelection:
    """Run the BBM circuit ``shots`` times for every AB setting and post-select by outcome."""
    if global_state.qubit_count != 4:
        raise DimensionMismatch("expected a 4-qubit state ordered (A, C, C', B)")
    if shots < 1:
        raise OutOfRange("shots must be >= 1")
    records = {}
    for k, setting in enumerate(settings):
        rng = derive_rng(seed, k)
        records[setting] = sample_indices(bell_circuit_probabilities(global_state, setting), shots, noise, rng)
    return BellPostSelection(shots, records, _group(records))
