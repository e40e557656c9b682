"""Spike-and-slab variable selection for wide Gaussian regression.

Exact model scores under a spike-and-slab prior, a tempered stochastic
shotgun search whose hottest chain doubles as a screening pass, weighted
model averaging, and posterior prediction intervals (closed-form and Monte
Carlo).  Designed for p far larger than n; the design matrix is never
centered in memory, so sparse inputs stay sparse.
"""

from .dataset import (
    DataFormatError,
    Dataset,
    DegenerateColumnError,
    apply_column_filters,
    load_covariates,
    load_dense,
    load_sparse,
    standardized_column,
    standardized_submatrix,
)
from .posterior import (
    Hyperparams,
    ModelState,
    ModelTooLargeError,
    NearCollinearError,
    NumericalDegeneracyError,
    extend_add,
    log_post_of,
    score_model,
)
from .neighborhood import (
    NeighborScores,
    full_neighborhood,
    scan_adds,
    scan_deletes,
    scan_swaps,
)
from .search import (
    EmptyNeighborhoodError,
    SearchConfig,
    SearchResult,
    TopModels,
    TraceStep,
    run_search,
    screen,
    shotgun_sample,
    temperature_schedule,
    top_k_weights,
    wam,
)
from .predict import (
    PredictiveEnsemble,
    mc_predict,
    model_mean_term,
    model_quad_term,
    ridge_coefficients,
    sample_sigma2,
    z_prediction_interval,
)
from .simbench import (
    DesignSpec,
    SelectionMetrics,
    SimData,
    default_hyperparams,
    evaluate,
    generate,
    group_alternative_hyperparams,
    theoretical_cov,
    time_to_map,
)
from . import oracle

__version__ = "0.1.0"

__all__ = [
    "DataFormatError", "Dataset", "DegenerateColumnError",
    "apply_column_filters", "load_covariates", "load_dense", "load_sparse",
    "standardized_column", "standardized_submatrix",
    "Hyperparams", "ModelState", "ModelTooLargeError", "NearCollinearError",
    "NumericalDegeneracyError", "extend_add", "log_post_of", "score_model",
    "NeighborScores", "full_neighborhood", "scan_adds", "scan_deletes",
    "scan_swaps",
    "EmptyNeighborhoodError", "SearchConfig", "SearchResult", "TopModels",
    "TraceStep", "run_search", "screen", "shotgun_sample",
    "temperature_schedule", "top_k_weights", "wam",
    "PredictiveEnsemble", "mc_predict", "model_mean_term", "model_quad_term",
    "ridge_coefficients", "sample_sigma2", "z_prediction_interval",
    "DesignSpec", "SelectionMetrics", "SimData", "default_hyperparams",
    "evaluate", "generate", "group_alternative_hyperparams",
    "theoretical_cov", "time_to_map",
    "oracle",
]
