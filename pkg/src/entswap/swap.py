"""Entanglement swapping on two partially entangled qubit pairs.

The pairs are ``|xi>_{AC}`` and ``|eta>_{C'B}``. A Bell-basis measurement on
``(C, C')`` leaves ``(A, B)`` in one of four conditional states. Two routes
are provided:

* :func:`decompose` builds the four-qubit product state and projects it onto
  each Bell state. This is the brute-force reference.
* :func:`analytic_concurrences` predicts the post-measurement concurrences
  from the local predictabilities and coherences of the ``C`` and ``C'``
  marginals alone, after the marginals have been phase-aligned by
  :func:`align_phases`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, OutOfRange
from .measures import concurrence_pure, l1_coherence, predictability
from .qstate import BlochVector, PureState, apply_rz, bloch_of, partial_trace

P_MIN = 1e-9
# |r_z| below this is treated as the equator when picking the hemisphere sign
EQUATOR_TOL = 1e-14


class BellOutcome(enum.Enum):
    PhiPlus = "PhiPlus"
    PhiMinus = "PhiMinus"
    PsiPlus = "PsiPlus"
    PsiMinus = "PsiMinus"

    @property
    def vector(self) -> np.ndarray:
        return _BELL_VECTORS[self]

    @property
    def bits(self) -> str:
        """Computational outcome on (C, C') after CNOT(C->C') then H(C)."""
        return _BELL_BITS[self]

    @classmethod
    def from_bits(cls, bits: str) -> "BellOutcome":
        return _BITS_TO_BELL[bits]


_S = 1 / np.sqrt(2)
_BELL_VECTORS = {
    BellOutcome.PhiPlus: np.array([_S, 0, 0, _S], dtype=complex),
    BellOutcome.PhiMinus: np.array([_S, 0, 0, -_S], dtype=complex),
    BellOutcome.PsiPlus: np.array([0, _S, _S, 0], dtype=complex),
    BellOutcome.PsiMinus: np.array([0, _S, -_S, 0], dtype=complex),
}
_BELL_BITS = {
    BellOutcome.PhiPlus: "00",
    BellOutcome.PsiPlus: "01",
    BellOutcome.PhiMinus: "10",
    BellOutcome.PsiMinus: "11",
}
_BITS_TO_BELL = {v: k for k, v in _BELL_BITS.items()}
OUTCOMES = tuple(BellOutcome)


def bell_state(outcome: BellOutcome) -> PureState:
    return PureState(outcome.vector)


def sgn(x: float) -> int:
    return int(np.sign(x))


@dataclass(frozen=True)
class SwapResult:
    """Per-outcome probability, conditional AB state and its concurrence.

    Outcomes with probability below ``P_MIN`` have ``None`` for state and
    concurrence and contribute nothing to ``averaged_concurrence``.
    """

    probability: dict[BellOutcome, float]
    post_state: dict[BellOutcome, PureState | None]
    post_concurrence: dict[BellOutcome, float | None]
    averaged_concurrence: float


def _check_pair(s: PureState, name: str):
    if s.qubit_count != 2:
        raise DimensionMismatch(f"{name} must be a two-qubit state")


def decompose(xi: PureState, eta: PureState, p_min: float = P_MIN) -> SwapResult:
    """Project ``|xi>_{AC} |eta>_{C'B}`` onto the Bell basis of ``(C, C')``."""
    _check_pair(xi, "xi")
    _check_pair(eta, "eta")
    # axes (A, C, C', B)
    psi = np.einsum("ac,db->acdb", xi.amps.reshape(2, 2), eta.amps.reshape(2, 2))
    prob, post, conc = {}, {}, {}
    for o in OUTCOMES:
        ab = np.einsum("acdb,cd->ab", psi, o.vector.conj().reshape(2, 2)).reshape(-1)
        pr = float(np.vdot(ab, ab).real)
        prob[o] = pr
        if pr < p_min:
            post[o] = conc[o] = None
        else:
            post[o] = PureState.from_unnormalized(ab)
            conc[o] = concurrence_pure(post[o])
    avg = sum(prob[o] * conc[o] for o in OUTCOMES if conc[o] is not None)
    return SwapResult(prob, post, conc, float(avg))


def averaged_entanglement(xi: PureState, eta: PureState) -> float:
    """Non-selective average of the AB concurrence, ``E(xi) * E(eta)``."""
    return concurrence_pure(xi) * concurrence_pure(eta)


def marginal_C(xi: PureState):
    return partial_trace(xi, {1})


def marginal_Cp(eta: PureState):
    return partial_trace(eta, {0})


def align_phases(xi: PureState, eta: PureState) -> tuple[PureState, PureState, float, float]:
    """Rotate C and C' about z so both marginals have real, nonnegative coherences.

    Returns ``(xi_aligned, eta_aligned, phi_C, phi_Cp)`` where the angles are
    the Bloch azimuths of the original marginals.
    """
    _check_pair(xi, "xi")
    _check_pair(eta, "eta")
    phi_c = bloch_of(marginal_C(xi)).phi
    phi_cp = bloch_of(marginal_Cp(eta)).phi
    return apply_rz(xi, 1, phi_c), apply_rz(eta, 0, phi_cp), phi_c, phi_cp


def hemisphere_sign(b_c: BlochVector, b_cp: BlochVector, tol: float = EQUATOR_TOL) -> int:
    def s(z):
        return 0 if abs(z) <= tol else sgn(z)

    return s(b_c.r_z) * s(b_cp.r_z)


def _check_pc(p: float, c: float, name: str):
    if p < 0 or c < 0 or p * p + c * c > 1 + 1e-12:
        raise OutOfRange(f"{name}: need P, C >= 0 and P^2 + C^2 <= 1, got P={p}, C={c}")


def analytic_probabilities(P_C: float, C_C: float, P_Cp: float, C_Cp: float, hemisphere: int) -> dict[BellOutcome, float]:
    """Bell outcome probabilities in the aligned frame from (P, C, sign)."""
    pp = hemisphere * P_C * P_Cp
    cc = C_C * C_Cp
    return {
        BellOutcome.PhiPlus: (1 + pp + cc) / 4,
        BellOutcome.PhiMinus: (1 + pp - cc) / 4,
        BellOutcome.PsiPlus: (1 - pp + cc) / 4,
        BellOutcome.PsiMinus: (1 - pp - cc) / 4,
    }


@dataclass(frozen=True)
class AnalyticPrediction:
    predicted_concurrence: dict[BellOutcome, float | None]
    hemisphere_sign: int
    aligned: bool = False


def analytic_concurrences(
    P_C: float, C_C: float, P_Cp: float, C_Cp: float, hemisphere: int, aligned: bool = False
) -> AnalyticPrediction:
    """Post-measurement concurrences from local predictabilities and coherences.

    ``hemisphere`` is +1 when the C and C' marginals lie in the same Bloch
    hemisphere, -1 for opposite ones and 0 when either sits on the equator
    (both branches then agree). ``aligned`` only records whether the inputs
    came from phase-aligned marginals.
    """
    if hemisphere not in (-1, 0, 1):
        raise OutOfRange(f"hemisphere sign must be -1, 0 or +1, got {hemisphere}")
    _check_pc(P_C, C_C, "C marginal")
    _check_pc(P_Cp, C_Cp, "C' marginal")
    n = np.sqrt(max(0.0, 1 - P_C**2 - C_C**2) * max(0.0, 1 - P_Cp**2 - C_Cp**2))
    out = {}
    for o, pr in analytic_probabilities(P_C, C_C, P_Cp, C_Cp, hemisphere).items():
        den = 4 * pr
        out[o] = None if den < 4 * P_MIN else float(min(1.0, max(0.0, n / den)))
    return AnalyticPrediction(out, hemisphere, aligned)


def bloch_probabilities(b_c: BlochVector, b_cp: BlochVector) -> dict[BellOutcome, float]:
    """Bell outcome probabilities for arbitrary (unaligned) marginals.

    Writing the marginal coherences through Bloch components,
    ``4 Re(xi_01 eta_01) = x x' - y y'`` and ``4 Re(xi_01 eta_10) = x x' + y y'``.
    """
    zz = b_c.r_z * b_cp.r_z
    phi_cross = b_c.r_x * b_cp.r_x - b_c.r_y * b_cp.r_y
    psi_cross = b_c.r_x * b_cp.r_x + b_c.r_y * b_cp.r_y
    return {
        BellOutcome.PhiPlus: (1 + zz + phi_cross) / 4,
        BellOutcome.PhiMinus: (1 + zz - phi_cross) / 4,
        BellOutcome.PsiPlus: (1 - zz + psi_cross) / 4,
        BellOutcome.PsiMinus: (1 - zz - psi_cross) / 4,
    }


def bloch_concurrences(b_c: BlochVector, b_cp: BlochVector) -> dict[BellOutcome, float | None]:
    """Post-measurement concurrences ``E(xi) E(eta) / (4 Pr)`` with E from the CCR."""
    n = np.sqrt(max(0.0, 1 - b_c.r**2) * max(0.0, 1 - b_cp.r**2))
    return {
        o: (None if pr < P_MIN else float(min(1.0, n / (4 * pr))))
        for o, pr in bloch_probabilities(b_c, b_cp).items()
    }


@dataclass
class VerifyReport:
    """Analytic predictions next to the projection oracle for one input pair."""

    phi_C: float
    phi_Cp: float
    P_C: float
    C_C: float
    P_Cp: float
    C_Cp: float
    prediction: AnalyticPrediction
    aligned_result: SwapResult
    raw_result: SwapResult
    deviation: dict[BellOutcome, float] = field(default_factory=dict)
    probability_deviation: dict[BellOutcome, float] = field(default_factory=dict)

    @property
    def max_deviation(self) -> float:
        return max(self.deviation.values(), default=0.0)

    @property
    def max_probability_deviation(self) -> float:
        return max(self.probability_deviation.values(), default=0.0)

    @property
    def probability_sum_error(self) -> float:
        return abs(sum(self.aligned_result.probability.values()) - 1)


def predict_and_verify(xi: PureState, eta: PureState) -> VerifyReport:
    """Align, predict from (P, C, sign), and compare against :func:`decompose`.

    ``raw_result`` holds the oracle on the original, unaligned inputs; the
    outcome labels of the aligned and unaligned protocols generally differ.
    """
    xi_t, eta_t, phi_c, phi_cp = align_phases(xi, eta)
    rho_c, rho_cp = marginal_C(xi_t), marginal_Cp(eta_t)
    pc, cc = predictability(rho_c), l1_coherence(rho_c)
    pcp, ccp = predictability(rho_cp), l1_coherence(rho_cp)
    s = hemisphere_sign(bloch_of(rho_c), bloch_of(rho_cp))
    pred = analytic_concurrences(pc, cc, pcp, ccp, s, aligned=True)
    aligned = decompose(xi_t, eta_t)
    probs = analytic_probabilities(pc, cc, pcp, ccp, s)
    dev = {
        o: abs(pred.predicted_concurrence[o] - aligned.post_concurrence[o])
        for o in OUTCOMES
        if aligned.post_concurrence[o] is not None and pred.predicted_concurrence[o] is not None
    }
    pdev = {o: abs(probs[o] - aligned.probability[o]) for o in OUTCOMES}
    return VerifyReport(
        phi_c, phi_cp, pc, cc, pcp, ccp, pred, aligned, decompose(xi, eta), dev, pdev
    )
