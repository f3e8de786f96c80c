"""Spectral meta-learning for mixed linear regression.

Pipeline: estimate the regression-vector subspace from many small tasks,
cluster medium tasks through a median-boosted projected distance matrix,
classify the remaining small tasks by a penalized residual objective, and
refine the component parameters by pooled least squares. MAP and
posterior-mean predictors then solve new few-shot tasks under the fitted
prior. An EM baseline and a benchmark harness round out the package.
"""

__version__ = "0.1.0"

from .model import (
    ClusterModel,
    FittedModel,
    MetaParams,
    Subspace,
    TaskBatch,
    TaskPool,
    validate_meta,
)
from .datagen import GenPreset, sample_meta_params, sample_pool, sample_task
from .linalg import SymMatrix, least_squares, top_k_eig
from .subspace import estimate_subspace, half_estimates, moment_matrix
from .cluster import (
    batch_estimates,
    initial_estimates,
    median,
    pairwise_distance,
    single_linkage,
)
from .classify import classify_task, refine
from .predict import posterior_log_weights, predict_bayes, predict_map, predict_y
from .em import em_fit, em_init_perturbed
from .eval import (
    clustering_accuracy,
    estimation_error,
    match_components,
    prediction_error,
    subspace_error,
)

__all__ = [
    "__version__",
    "MetaParams",
    "TaskBatch",
    "TaskPool",
    "Subspace",
    "ClusterModel",
    "FittedModel",
    "validate_meta",
    "GenPreset",
    "sample_meta_params",
    "sample_task",
    "sample_pool",
    "SymMatrix",
    "top_k_eig",
    "least_squares",
    "half_estimates",
    "moment_matrix",
    "estimate_subspace",
    "batch_estimates",
    "pairwise_distance",
    "median",
    "single_linkage",
    "initial_estimates",
    "classify_task",
    "refine",
    "posterior_log_weights",
    "predict_map",
    "predict_bayes",
    "predict_y",
    "em_init_perturbed",
    "em_fit",
    "subspace_error",
    "match_components",
    "estimation_error",
    "clustering_accuracy",
    "prediction_error",
]
