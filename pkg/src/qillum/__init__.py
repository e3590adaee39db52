"""Quantum-illumination target detection: states, bounds, receivers, CLI.

The package models the binary decision between "background only" and
"weakly reflected signal plus background" for an entangled signal-idler
transmitter and its coherent-state benchmark, at desk scale in a truncated
Fock space.
"""

from .bounds import (
    BoundTriple,
    ExponentReport,
    asymptotic_exponents,
    error_prob_bounds,
    q_s,
    qcb,
)
from .errors import (
    DomainError,
    OptimizationError,
    ParseError,
    QIError,
    TruncationError,
)
from .fockspace import (
    JointState,
    MomentReport,
    SpectralData,
    TruncationSpec,
    block_eigendecompose,
    build_displaced_thermal,
    build_rho0,
    build_rho1,
    hypergeom_2f1_terminating,
    idler_photon_pmf,
    moments_check,
    thermal_cutoff,
    thermal_state,
)
from .receivers import (
    DecisionRule,
    GainOptimum,
    HelstromResult,
    OpaStatistics,
    half_erfc_sqrt,
    helstrom_single_shot,
    homodyne_error,
    majority_vote_error,
    opa_bhattacharyya,
    opa_count_pmf,
    opa_error_exact,
    opa_error_gaussian,
    opa_error_onoff,
    opa_output_means,
    optimize_gain,
    resolve_gain,
)
from .scenario import (
    CountModel,
    ReceiverConfig,
    ScenarioParams,
    ThresholdPolicy,
    parse_config,
    render_config,
    validate_params,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "QIError",
    "DomainError",
    "ParseError",
    "TruncationError",
    "OptimizationError",
    # scenario
    "ScenarioParams",
    "ReceiverConfig",
    "ThresholdPolicy",
    "CountModel",
    "validate_params",
    "parse_config",
    "render_config",
    # fockspace
    "TruncationSpec",
    "JointState",
    "MomentReport",
    "SpectralData",
    "thermal_cutoff",
    "idler_photon_pmf",
    "hypergeom_2f1_terminating",
    "build_rho0",
    "build_rho1",
    "moments_check",
    "block_eigendecompose",
    "thermal_state",
    "build_displaced_thermal",
    # bounds
    "ExponentReport",
    "BoundTriple",
    "q_s",
    "qcb",
    "error_prob_bounds",
    "asymptotic_exponents",
    # receivers
    "OpaStatistics",
    "DecisionRule",
    "GainOptimum",
    "HelstromResult",
    "half_erfc_sqrt",
    "homodyne_error",
    "opa_output_means",
    "opa_count_pmf",
    "opa_error_exact",
    "opa_error_gaussian",
    "optimize_gain",
    "opa_bhattacharyya",
    "opa_error_onoff",
    "helstrom_single_shot",
    "majority_vote_error",
    "resolve_gain",
]
