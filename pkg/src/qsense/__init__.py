"""Multiparameter quantum-estimation bounds and distributed-sensing numerics."""

from .core import (
    COMPLEX_EQ_ATOL,
    DENSE_DIMENSION_CAP,
    DensityMatrix,
    FockBasis,
    HermitianOperator,
    InestimableError,
    NumericalError,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    POVM,
    SparseMultimodeState,
    TOLERANCES,
    ValidationError,
    WeightMatrix,
    apply_phase_encoding,
    density_from_pure,
    diagonal_operator,
    identity,
    projective_measurement,
    spanned_sector,
    spectral_decomposition,
    state_vector,
    tensor_product,
)
from .model import (
    ParametricModel,
    ProbabilityVector,
    explicit_model,
    finite_difference_model,
    probabilities,
    probability_derivatives,
    state_derivatives,
    unitary_family,
)
from .bounds import (
    BoundChain,
    FisherMatrix,
    QfimResult,
    SaturationChecks,
    ScalarBound,
    WeakBound,
    WeightAnalysis,
    best_combination,
    bound_chain_report,
    classical_fim,
    pseudo_inverse,
    qfim,
    qfim_pure,
    qfim_pure_dense,
    saturation_checks,
    scalar_bound,
    sld,
    weak_qcrb,
    weight_matrix_analysis,
)
from .holevo import (
    HolevoSolution,
    SandwichReport,
    UnbiasedFamily,
    hb_sandwich,
    holevo_bound,
    unbiased_family,
)
from .dqs import (
    ProbeCheck,
    ProbeSpec,
    SensorNetwork,
    build_probe,
    closed_form_sensitivity,
    gain,
    global_sensor_network,
    local_network_from_total,
    local_sensor_network,
    nu_average,
    phase_generators,
    probe_from_json,
    probe_to_json,
    verify_probe,
)
from .estimation import (
    EstimateRecord,
    OutcomeRecord,
    SaturationReport,
    empirical_covariance,
    max_likelihood,
    sample_outcomes,
    saturation_report,
    trial_generator,
)
from .bayes import (
    AsymptoticReport,
    PosteriorGrid,
    asymptotic_check,
    bayes_covariance,
    bayes_update,
    likelihood_table,
    posterior_mean,
    posterior_mode,
    posterior_spread,
    posterior_to_csv,
    uniform_prior,
)

__version__ = "0.1.0"
