"""Seeded property suites behind ``entswap verify``.

Every trial draws its inputs from ``numpy.random.default_rng(seed + trial)``
so a failing trial can be replayed from the reported seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownSuite
from .measures import concurrence_pure, measure_triple
from .qstate import BlochVector, haar_random_pure, haar_random_unitary, pure_with_marginal
from .shots import (
    ReadoutNoise,
    born_probabilities,
    build_calibration,
    mitigate,
    sample_measurement,
    total_variation,
)
from .swap import BellOutcome, OUTCOMES, decompose, predict_and_verify

TOL = 1e-10


@dataclass
class SuiteReport:
    suite: str
    trials: int
    passed: bool
    max_deviation: float
    worst_seed: int | None
    notes: list[str] = field(default_factory=list)

    def lines(self) -> list[str]:
        status = "PASS" if self.passed else "FAIL"
        head = f"[{status}] {self.suite}: trials={self.trials} max_deviation={self.max_deviation:.3e}"
        if self.worst_seed is not None:
            head += f" worst_seed={self.worst_seed}"
        return [head] + [f"    {n}" for n in self.notes]


class _Worst:
    def __init__(self):
        self.value = 0.0
        self.seed = None

    def update(self, value: float, seed: int):
        if value > self.value or self.seed is None:
            self.value, self.seed = max(value, self.value), seed


def suite_ccr(trials: int, seed: int) -> SuiteReport:
    worst = _Worst()
    for t in range(trials):
        s = haar_random_pure(2, seed + t)
        dev = max(abs(measure_triple(s, q).ccr_residual) for q in (0, 1))
        worst.update(dev, seed + t)
    return SuiteReport("ccr", trials, worst.value <= TOL, worst.value, worst.seed)


def suite_swap_oracle(trials: int, seed: int) -> SuiteReport:
    worst, prod = _Worst(), _Worst()
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        xi, eta = haar_random_pure(2, rng), haar_random_pure(2, rng)
        rep = predict_and_verify(xi, eta)
        worst.update(rep.max_deviation, seed + t)
        law = abs(rep.raw_result.averaged_concurrence - concurrence_pure(xi) * concurrence_pure(eta))
        prod.update(law, seed + t)
    dev = max(worst.value, prod.value)
    return SuiteReport(
        "swap_oracle", trials, dev <= TOL, dev, worst.seed if worst.value >= prod.value else prod.seed,
        [f"analytic vs oracle {worst.value:.3e}", f"product law {prod.value:.3e}"],
    )


def suite_probabilities(trials: int, seed: int) -> SuiteReport:
    norm, rewrite, per_outcome = _Worst(), _Worst(), _Worst()
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        xi, eta = haar_random_pure(2, rng), haar_random_pure(2, rng)
        rep = predict_and_verify(xi, eta)
        norm.update(max(rep.probability_sum_error, abs(sum(rep.raw_result.probability.values()) - 1)), seed + t)
        rewrite.update(rep.max_probability_deviation, seed + t)
        target = concurrence_pure(xi) * concurrence_pure(eta)
        res = rep.raw_result
        dev = max(
            (abs(res.post_concurrence[o] * 4 * res.probability[o] - target) for o in OUTCOMES
             if res.post_concurrence[o] is not None),
            default=0.0,
        )
        per_outcome.update(dev, seed + t)
    dev = max(norm.value, rewrite.value, per_outcome.value)
    return SuiteReport(
        "probabilities", trials, dev <= TOL, dev, rewrite.seed,
        [f"sum of probabilities {norm.value:.3e}", f"(P, C, sgn) rewrite {rewrite.value:.3e}",
         f"E * 4 Pr = E(xi) E(eta) {per_outcome.value:.3e}"],
    )


def _random_pair(rng, P: float, C: float, z_sign: int, marginal_qubit: int):
    phi = rng.uniform(0, 2 * np.pi)
    bloch = BlochVector(C * np.cos(phi), C * np.sin(phi), z_sign * P)
    return pure_with_marginal(bloch, marginal_qubit, haar_random_unitary(2, rng))


def special_case_family(family: str, rng: np.random.Generator):
    """Draw one (xi, eta) input pair from a named special-case family.

    Returns ``(xi, eta, expected_maximal)`` where the last item is the set of
    aligned-frame outcomes that must come out maximally entangled.
    """
    if family == "equal_P_zero_C":
        P = rng.uniform(0.05, 0.95)
        s = rng.choice([-1, 1])
        xi, eta = _random_pair(rng, P, 0.0, s, 1), _random_pair(rng, P, 0.0, s, 0)
        return xi, eta, {BellOutcome.PsiPlus, BellOutcome.PsiMinus}
    if family == "zero_P_equal_C":
        C = rng.uniform(0.05, 0.95)
        xi, eta = _random_pair(rng, 0.0, C, 1, 1), _random_pair(rng, 0.0, C, 1, 0)
        return xi, eta, {BellOutcome.PhiMinus, BellOutcome.PsiMinus}
    if family == "equal_P_equal_C":
        while True:
            P, C = rng.uniform(0.05, 0.9, size=2)
            if P * P + C * C < 0.9:
                break
        s1, s2 = rng.choice([-1, 1], size=2)
        xi, eta = _random_pair(rng, P, C, s1, 1), _random_pair(rng, P, C, s2, 0)
        expected = {BellOutcome.PsiMinus} if s1 == s2 else {BellOutcome.PhiMinus}
        return xi, eta, expected
    raise UnknownSuite(f"unknown special-case family {family!r}")


SPECIAL_FAMILIES = ("equal_P_zero_C", "zero_P_equal_C", "equal_P_equal_C")


def suite_special_cases(trials: int, seed: int) -> SuiteReport:
    worst = _Worst()
    failures = []
    for fam_i, family in enumerate(SPECIAL_FAMILIES):
        for t in range(trials):
            tseed = seed + t
            rng = np.random.default_rng([tseed, fam_i])
            xi, eta, expected = special_case_family(family, rng)
            rep = predict_and_verify(xi, eta)
            conc = rep.aligned_result.post_concurrence
            maximal = {o for o in OUTCOMES if conc[o] is not None and abs(conc[o] - 1) <= TOL}
            dev = max([rep.max_deviation] + [abs(conc[o] - 1) for o in expected])
            worst.update(dev, tseed)
            if maximal != expected:
                failures.append(f"{family} seed={tseed}: maximal={sorted(o.value for o in maximal)}")
    notes = failures[:5] + ([f"... {len(failures) - 5} more"] if len(failures) > 5 else [])
    return SuiteReport("special_cases", trials, not failures and worst.value <= TOL, worst.value, worst.seed, notes)


def mitigation_trial(seed: int, noise: ReadoutNoise, shots: int) -> tuple[float, float]:
    """TV distance to the ideal ZZ distribution before and after mitigation, for one Haar state."""
    rng = np.random.default_rng(seed)
    state = haar_random_pure(2, rng)
    ideal = born_probabilities(state, "ZZ")
    counts = sample_measurement(state, "ZZ", shots, noise, rng)
    cal = build_calibration(noise, 2, shots, seed=int(rng.integers(2**31)))
    return total_variation(counts.frequencies(), ideal), total_variation(mitigate(counts, cal), ideal)


def suite_mitigation(trials: int, seed: int, eps01: float = 0.02, eps10: float = 0.04, shots: int = 8192) -> SuiteReport:
    noise = ReadoutNoise(eps01, eps10)
    improved = 0
    worst_gap, worst_seed = -np.inf, None
    for t in range(trials):
        raw, mit = mitigation_trial(seed + t, noise, shots)
        improved += mit < raw
        if mit - raw > worst_gap:
            worst_gap, worst_seed = mit - raw, seed + t
    frac = improved / trials
    return SuiteReport(
        "mitigation", trials, frac >= 0.95, float(worst_gap), worst_seed,
        [f"mitigated closer to ideal in {improved}/{trials} trials ({frac:.1%}, need >= 95%)",
         "max_deviation is the worst TV(mitigated) - TV(raw)"],
    )


SUITES = {
    "ccr": suite_ccr,
    "swap_oracle": suite_swap_oracle,
    "probabilities": suite_probabilities,
    "special_cases": suite_special_cases,
    "mitigation": suite_mitigation,
}


def run_verify(suite: str, trials: int = 1000, seed: int = 0) -> SuiteReport:
    if suite not in SUITES:
        raise UnknownSuite(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    return SUITES[suite](trials, seed)
