"""Quantum ensembles as explicit pure-state compositions.

Two ensembles can share a density matrix yet differ in how many molecules sit
in which pure state; collective-observable fluctuations reveal the
difference.
"""

from .decompositions import (
    EffectivePureParams,
    GorterInput,
    KickModel,
    ProductDecomposition,
    braunstein_decomposition,
    decomposition_to_composition,
    effective_bell_composition,
    effective_pure_density,
    gorter_t1,
    random_kick_average,
)
from .ensemble import (
    EnsembleComposition,
    FluctuationReport,
    IdenticalMixedEnsemble,
    apply_unitary,
    density_matrix,
    ensemble_expectation,
    entanglement_census,
    fluctuation_identical_mixed,
    fluctuation_proper,
    full_product_state,
    molecule_expectation,
    oracle_fluctuation,
    same_density_matrix,
)
from .linalg import (
    SIGNED_AXES,
    SignedAxis,
    concurrence,
    eigendecompose,
    partial_trace,
    pauli_expand,
    pauli_matrix,
    tensor_product,
)
from .observables import CollectiveObservable, from_pauli_terms, pairwise_zz, sigma_z_single, sigma_zz_pair
from .sampling import (
    SampleConfig,
    born_sample,
    distinguish_compositions,
    estimate_fluctuation,
    preskill_protocol,
    round_stream,
    sample_collective_round,
)

__version__ = "0.1.0"
