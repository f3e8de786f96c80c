"""Classification of light tasks and refined parameter estimation.

A light task joins the cluster minimizing a penalized residual objective;
once every task is placed, per-cluster least squares over all pooled
examples yields the refined meta-parameter estimate.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .linalg import least_squares
from .model import ClusterModel, FittedModel, TaskBatch

__all__ = ["classify_task", "classification_objectives", "refine"]


def classification_objectives(task: TaskBatch, model: ClusterModel) -> np.ndarray:
    """Per-cluster value of RSS_l / (2 r2_l) + t * log(r_l)."""
    if np.any(model.r2_tilde <= 0):
        raise ValueError("all r2_tilde must be positive")
    resid = task.y[:, None] - task.X @ model.w_tilde  # (t, k)
    rss = (resid**2).sum(axis=0)
    return rss / (2.0 * model.r2_tilde) + 0.5 * task.t * np.log(model.r2_tilde)


def classify_task(task: TaskBatch, model: ClusterModel) -> int:
    """Index of the cluster minimizing the penalized residual objective.

    Ties break toward the smallest index.
    """
    return int(np.argmin(classification_objectives(task, model)))


def refine(
    heavy_tasks: Sequence[TaskBatch],
    partition: Sequence[Sequence[int]],
    light2: Sequence[TaskBatch],
    model: ClusterModel,
    d: int,
) -> FittedModel:
    """Assign light tasks to clusters and refit each cluster by least squares.

    W_hat[:, l] is the least-squares fit over all pooled examples of
    cluster l (heavy members plus assigned light tasks); s2_hat[l] is the
    residual sum of squares divided by (example count - d). Clusters with
    example count <= d fall back to the minimum-norm fit and are flagged
    degenerate instead of aborting. p_hat counts light-2 assignments only.
    """
    heavy_tasks = list(heavy_tasks)
    light2 = list(light2)
    k = model.k

    groups_X: list[list[np.ndarray]] = [[] for _ in range(k)]
    groups_y: list[list[np.ndarray]] = [[] for _ in range(k)]
    for ell, members in enumerate(partition):
        for i in members:
            groups_X[ell].append(heavy_tasks[i].X)
            groups_y[ell].append(heavy_tasks[i].y)

    light_counts = np.zeros(k)
    for task in light2:
        ell = classify_task(task, model)
        groups_X[ell].append(task.X)
        groups_y[ell].append(task.y)
        light_counts[ell] += 1

    W_hat = np.zeros((d, k))
    s2_hat = np.zeros(k)
    s2_valid = np.zeros(k, dtype=bool)
    for ell in range(k):
        if not groups_X[ell]:
            continue
        X = np.vstack(groups_X[ell])
        y = np.concatenate(groups_y[ell])
        w = least_squares(X, y)
        W_hat[:, ell] = w
        m = X.shape[0]
        if m > d:
            resid = y - X @ w
            s2 = float(resid @ resid) / (m - d)
            s2_hat[ell] = s2
            # an exact fit leaves only rounding noise; flag it degenerate
            scale = float(y @ y) / m
            s2_valid[ell] = s2 > 1e-12 * max(scale, 1e-300)
        # m <= d: underdetermined, s2 stays flagged invalid

    n_l2 = len(light2)
    if n_l2 > 0:
        p_hat = light_counts / n_l2
        p_valid = True
    else:
        p_hat = np.full(k, np.nan)
        p_valid = False

    return FittedModel(
        W_hat=W_hat, s2_hat=s2_hat, p_hat=p_hat, s2_valid=s2_valid, p_valid=p_valid
    )
