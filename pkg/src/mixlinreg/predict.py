"""MAP and posterior-mean prediction for a new task under a fitted model.

All likelihood arithmetic stays in log space; unnormalized weights are
never materialized because the residual term routinely exceeds the
floating-point exponent range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import FittedModel, TaskBatch

__all__ = [
    "PosteriorWeights",
    "posterior_log_weights",
    "predict_map",
    "predict_bayes",
    "predict_y",
]


@dataclass(frozen=True)
class PosteriorWeights:
    """Unnormalized log posterior weights and their softmax normalization."""

    log_w: np.ndarray  # (k,)
    normalized: np.ndarray  # (k,), sums to 1

    def __post_init__(self):
        if abs(self.normalized.sum() - 1.0) > 1e-12:
            raise ValueError("normalized weights must sum to 1")


def posterior_log_weights(D: TaskBatch, model: FittedModel) -> PosteriorWeights:
    """log w_i = -RSS_i / (2 s2_i) - (tau/2) log s2_i + log p_i, normalized
    by log-sum-exp."""
    s2 = model.s2_hat
    p = model.p_hat
    if np.any(s2 <= 0):
        raise ValueError("all s2_hat must be positive")
    if not model.p_valid or np.any(p <= 0):
        raise ValueError("all p_hat must be positive")
    resid = D.y[:, None] - D.X @ model.W_hat  # (tau, k)
    rss = (resid**2).sum(axis=0)
    log_w = -rss / (2.0 * s2) - 0.5 * D.t * np.log(s2) + np.log(p)
    shifted = log_w - log_w.max()
    expw = np.exp(shifted)
    return PosteriorWeights(log_w=log_w, normalized=expw / expw.sum())


def predict_map(D: TaskBatch, model: FittedModel) -> tuple[int, np.ndarray]:
    """The maximum-posterior component index (ties to the smallest index)
    and its regression vector."""
    weights = posterior_log_weights(D, model)
    idx = int(np.argmax(weights.log_w))
    return idx, model.W_hat[:, idx].copy()


def predict_bayes(D: TaskBatch, model: FittedModel) -> np.ndarray:
    """Posterior-mean regression vector sum_i w_i(D) W_hat[:, i]."""
    weights = posterior_log_weights(D, model)
    return model.W_hat @ weights.normalized


def predict_y(x: np.ndarray, beta: np.ndarray) -> float:
    """Label prediction x^T beta."""
    x = np.asarray(x, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if x.shape != beta.shape:
        raise ValueError("x and beta must have matching dimensions")
    return float(x @ beta)
