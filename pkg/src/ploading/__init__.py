"""Principal loading analysis with perturbation diagnostics.

Variable blocks that barely load on the leading eigenvectors of a
covariance or correlation matrix can be dropped wholesale; this package
detects such blocks, quantifies the loading cut-offs that survive both
sampling noise and deliberate model perturbations, and cross-checks the
discarding decision against classical regression p-values.
"""
from . import exceptions
from .linalg import (
    EigenSystem,
    correlation_from_covariance,
    eigh,
    mean_center,
    sample_covariance,
    solve_spd,
    symmetrize,
)
from .ols import (
    OlsFit,
    OrdinaryLeastSquares,
    discard_by_ols,
    ols_fit,
    student_t_sf,
)
from .perturbation import (
    DAVIS_KAHAN_CONSTANT,
    DEFAULT_CUTOFF_CONSTANT,
    ApproxCoefficients,
    CorrelationSplit,
    CutoffBounds,
    PerturbationSplit,
    Population,
    angle_condition,
    approx_coefficients,
    approx_coefficients_dense,
    convergence_rate_estimate,
    cutoff_bounds,
    eigengap,
    evaluate_conditions,
    norm_condition,
    ratio_condition,
    split_sample,
    split_sample_correlation,
)
from .pla import (
    LOADING_FLOOR,
    DiscardCandidate,
    PlaReport,
    PrincipalLoadingAnalysis,
    explained_variance,
    find_discardable_blocks,
    is_discardable,
    match_eigen_to_block,
    run_pla,
)
from .simulation import (
    StudyResult,
    TrialOutcome,
    make_population,
    run_study,
    run_trial,
    sample_gaussian,
    stream_generator,
    summarize_study,
    trial_substream,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "exceptions",
    # linear algebra
    "EigenSystem",
    "correlation_from_covariance",
    "eigh",
    "mean_center",
    "sample_covariance",
    "solve_spd",
    "symmetrize",
    # block detection
    "LOADING_FLOOR",
    "DiscardCandidate",
    "PlaReport",
    "PrincipalLoadingAnalysis",
    "explained_variance",
    "find_discardable_blocks",
    "is_discardable",
    "match_eigen_to_block",
    "run_pla",
    # regression
    "OlsFit",
    "OrdinaryLeastSquares",
    "discard_by_ols",
    "ols_fit",
    "student_t_sf",
    # perturbation analysis
    "DAVIS_KAHAN_CONSTANT",
    "DEFAULT_CUTOFF_CONSTANT",
    "ApproxCoefficients",
    "CorrelationSplit",
    "CutoffBounds",
    "PerturbationSplit",
    "Population",
    "angle_condition",
    "approx_coefficients",
    "approx_coefficients_dense",
    "convergence_rate_estimate",
    "cutoff_bounds",
    "eigengap",
    "evaluate_conditions",
    "norm_condition",
    "ratio_condition",
    "split_sample",
    "split_sample_correlation",
    # simulation
    "StudyResult",
    "TrialOutcome",
    "make_population",
    "run_study",
    "run_trial",
    "sample_gaussian",
    "stream_generator",
    "summarize_study",
    "trial_substream",
]
