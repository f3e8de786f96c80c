"""Evaluation metrics: subspace error, component matching, estimation and
prediction errors, clustering accuracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .datagen import TAG_PREDICT, sample_task, task_rng
from .model import FittedModel, MetaParams, Subspace, TaskBatch
from .predict import predict_bayes, predict_map

__all__ = [
    "subspace_error",
    "match_components",
    "estimation_error",
    "clustering_accuracy",
    "PredictionReport",
    "prediction_error",
]


def subspace_error(U: Subspace, meta: MetaParams) -> float:
    """rho^-1 max_i ||(U U^T - I) w_i||."""
    resid = U.project(meta.W) - meta.W
    return float(np.linalg.norm(resid, axis=0).max() / meta.rho)


def match_components(est: FittedModel, truth: MetaParams) -> np.ndarray:
    """Permutation pi minimizing sum_i ||W_hat[:, i] - W[:, pi(i)]||.

    Estimated component i corresponds to true component pi[i]; computed by
    the Hungarian method on the pairwise distance costs.
    """
    if est.k != truth.k:
        raise ValueError("component counts differ")
    diff = est.W_hat[:, :, None] - truth.W[:, None, :]
    cost = np.sqrt((diff**2).sum(axis=0))
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(truth.k, dtype=np.int64)
    perm[rows] = cols
    return perm


def estimation_error(est: FittedModel, truth: MetaParams, t_l2: int) -> float:
    """Smallest eps such that, after component matching, for every i:
    ||w_hat - w|| <= eps s, |s2_hat - s2| <= (eps/sqrt(d)) s2, and
    |p_hat - p| <= eps sqrt(t_l2/d) p."""
    perm = match_components(est, truth)
    d = truth.d
    w_err = np.linalg.norm(est.W_hat - truth.W[:, perm], axis=0)
    s2 = truth.s[perm] ** 2
    terms = [
        w_err / truth.s[perm],
        np.sqrt(d) * np.abs(est.s2_hat - s2) / s2,
    ]
    if est.p_valid:
        terms.append(
            np.sqrt(d / t_l2) * np.abs(est.p_hat - truth.p[perm]) / truth.p[perm]
        )
    return float(np.max(terms))


def clustering_accuracy(partition, tasks) -> float:
    """Best-matching fraction of correctly grouped tasks.

    Clusters are matched to true component labels by a Hungarian
    assignment maximizing the overlap counts.
    """
    tasks = list(tasks)
    labels = [task.true_component for task in tasks]
    if any(lab is None for lab in labels):
        raise ValueError("clustering accuracy needs tasks with true labels")
    labels = np.asarray(labels)
    n_labels = int(labels.max()) + 1
    overlap = np.zeros((len(partition), n_labels))
    for c, members in enumerate(partition):
        for i in members:
            overlap[c, labels[i]] += 1
    rows, cols = linear_sum_assignment(-overlap)
    return float(overlap[rows, cols].sum() / len(tasks))


@dataclass(frozen=True)
class PredictionReport:
    """Monte Carlo train/test/parameter errors for both predictors."""

    map_train: float
    map_test: float
    bayes_train: float
    bayes_test: float
    map_param: float
    bayes_param: float
    noise_floor: float
    trials: int


def prediction_error(
    model: FittedModel,
    truth: MetaParams,
    tau: int,
    trials: int,
    seed: int,
) -> PredictionReport:
    """Draw fresh tasks with tau training and one test example each and
    average the squared errors of the MAP and posterior-mean predictors.

    Each trial has its own derived random stream, so the aggregate is
    deterministic in the seed and independent of evaluation order.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    sums = np.zeros(6)  # map/bayes train, map/bayes test, map/bayes param
    for trial in range(trials):
        rng = task_rng(seed, TAG_PREDICT, trial)
        task = sample_task(truth, tau + 1, rng)
        train = TaskBatch(
            X=task.X[:tau], y=task.y[:tau], true_component=task.true_component
        )
        x_test, y_test = task.X[tau], task.y[tau]
        w_true = truth.W[:, task.true_component]

        _, beta_map = predict_map(train, model)
        beta_bayes = predict_bayes(train, model)
        for j, beta in enumerate((beta_map, beta_bayes)):
            sums[j] += float(np.mean((train.X @ beta - train.y) ** 2))
            sums[2 + j] += (float(x_test @ beta) - y_test) ** 2
            sums[4 + j] += float(np.sum((beta - w_true) ** 2))
    sums /= trials
    return PredictionReport(
        map_train=float(sums[0]),
        bayes_train=float(sums[1]),
        map_test=float(sums[2]),
        bayes_test=float(sums[3]),
        map_param=float(sums[4]),
        bayes_param=float(sums[5]),
        noise_floor=truth.noise_floor,
        trials=trials,
    )
