"""Simulation toolkit for spin-flip (universal-NOT) correlation experiments.

Layers, bottom to top: dense linear algebra (`qmath`), spin states and the
flip map (`spinstates`), correlation measures (`correlations`), the
real-amplitude embedding (`embedding`), the ion pulse simulator (`trapsim`),
shot-noise tomography (`tomography`), and the orchestration CLI (`cli`).
"""

from .correlations import (
    CorrelationReport,
    MeasurementBasis,
    classical_correlation,
    conditional_J,
    discord,
    holevo_chi,
    mutual_information,
)
from .embedding import decode_pair, decoding_map, encode_pair, encode_qubit, encoded_unot
from .qmath import (
    ContractViolation,
    eig_hermitian,
    fidelity,
    partial_trace,
    trace_distance,
    von_neumann_entropy,
)
from .spinstates import (
    STANDARD_DIRECTIONS,
    SpinPairEnsemble,
    aligned_ensemble,
    aligned_pair_state,
    antialigned_ensemble,
    antialigned_pair_state,
    bloch_state,
    ensemble_density,
    quantum_classical_state,
    unot_apply,
)
from .tomography import (
    TomographyDataset,
    ideal_population,
    measurement_settings,
    monte_carlo_errors,
    reconstruct_mle,
    simulate_dataset,
)
from .trapsim import (
    IonState,
    Pulse,
    PulseSequence,
    compile_encoded_unot,
    flip,
    microwave,
    prepare_pair,
    red_sideband,
    swap,
)

__version__ = "0.1.0"
