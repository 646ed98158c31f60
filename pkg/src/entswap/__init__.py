"""Entanglement swapping from partially entangled two-qubit pure states.

Relates the local predictability and coherence of the measured qubits to the
entanglement distributed by a Bell-basis measurement, and emulates the
shot-based tomography experiment that checks it.
"""

from .measures import (
    MeasureTriple,
    concurrence_mixed,
    concurrence_pure,
    l1_coherence,
    measure_triple,
    predictability,
)
from .qstate import (
    BlochVector,
    DensityMatrix,
    PureState,
    apply_rz,
    bloch_of,
    haar_random_pure,
    make_pair_state,
    partial_trace,
    tensor,
)
from .swap import (
    AnalyticPrediction,
    BellOutcome,
    SwapResult,
    align_phases,
    analytic_concurrences,
    averaged_entanglement,
    decompose,
    predict_and_verify,
)

__version__ = "0.1.0"
