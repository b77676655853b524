from ._core import (
    ConfigError,
    EstimateReport,
    EstimationError,
    EstimatorConfig,
    IoError,
    Problem,
    estimate,
    lg_exact_expected_utility,
    lg_exact_utility_variance,
    make_problem,
    nonlinear_forward,
    optimize,
    rate_study,
    registered_models,
    solve_diffusion,
)

__all__ = [
    "ConfigError",
    "EstimateReport",
    "EstimationError",
    "EstimatorConfig",
    "IoError",
    "Problem",
    "estimate",
    "lg_exact_expected_utility",
    "lg_exact_utility_variance",
    "make_problem",
    "nonlinear_forward",
    "optimize",
    "rate_study",
    "registered_models",
    "solve_diffusion",
]
