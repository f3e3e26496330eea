"""Uncertainty propagation and filtering for linear Gaussian systems as
proximal-operator recursions, with exact references to test against."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ControllabilityError,
    DimensionError,
    ModeMismatchError,
    NumericFailure,
    OracleFailure,
    ProxflowError,
    SingularityError,
    StabilityError,
    StepSizeError,
    ValidationError,
)
from .matrices import (
    SpdMatrix,
    expm,
    inv_spd,
    inv_sqrt_spd,
    lyapunov_solve,
    quadratic_matrix_solve,
    sqrt_spd,
    sym_skew_split,
)
from .gaussians import (
    AffineMap,
    Gaussian,
    energy_quadratic,
    free_energy,
    grad_w2_cross,
    kl_gaussian,
    neg_entropy,
    phi_expectation,
    trace_projection,
    transport_map,
    w2_gaussian,
)
from .propagation import (
    EquipartitionFrame,
    LinearSystem,
    StepConfig,
    jko_step_general_cov,
    jko_step_general_mean,
    jko_step_symmetric,
    make_equipartition,
    propagate,
    symmetrized_pair,
)
from .oracles import (
    OdeConfig,
    ProxObjective,
    SearchConfig,
    brute_force_prox,
    exact_cov,
    exact_mean,
    kalman_bucy_run,
    luenberger_run,
    prox_objective_value,
)
from .filtering import (
    ErrorSummary,
    FilterRun,
    MeasurementModel,
    error_metrics,
    lmmr_update,
    run_filter,
    terminal_rmse,
    wasserstein_update,
)
from .simulate import SimPath, coarsen, increments_to_y, simulate
from .rng import GaussianStream, SplitMix64

__all__ = [
    "AffineMap",
    "ConfigError",
    "ControllabilityError",
    "DimensionError",
    "EquipartitionFrame",
    "ErrorSummary",
    "FilterRun",
    "Gaussian",
    "GaussianStream",
    "LinearSystem",
    "MeasurementModel",
    "ModeMismatchError",
    "NumericFailure",
    "OdeConfig",
    "OracleFailure",
    "ProxObjective",
    "ProxflowError",
    "SearchConfig",
    "SimPath",
    "SingularityError",
    "SpdMatrix",
    "StabilityError",
    "StepConfig",
    "StepSizeError",
    "SplitMix64",
    "ValidationError",
    "brute_force_prox",
    "coarsen",
    "energy_quadratic",
    "error_metrics",
    "exact_cov",
    "exact_mean",
    "expm",
    "free_energy",
    "grad_w2_cross",
    "increments_to_y",
    "inv_spd",
    "inv_sqrt_spd",
    "jko_step_general_cov",
    "jko_step_general_mean",
    "jko_step_symmetric",
    "kalman_bucy_run",
    "kl_gaussian",
    "lmmr_update",
    "luenberger_run",
    "lyapunov_solve",
    "make_equipartition",
    "neg_entropy",
    "phi_expectation",
    "propagate",
    "prox_objective_value",
    "quadratic_matrix_solve",
    "run_filter",
    "simulate",
    "sqrt_spd",
    "sym_skew_split",
    "symmetrized_pair",
    "terminal_rmse",
    "trace_projection",
    "transport_map",
    "w2_gaussian",
    "wasserstein_update",
]
