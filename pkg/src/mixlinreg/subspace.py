"""Subspace estimation from light tasks via the split-sample moment matrix.

Each task contributes two independent half-sample estimates b1, b2 of its
regression vector; the symmetrized average of their outer products is an
unbiased estimate of sum_j p_j w_j w_j^T, whose top-k eigenvectors span
the regression vectors.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .datagen import TAG_L1, sample_task, task_rng
from .linalg import SymMatrix, top_k_eig
from .model import MetaParams, Subspace, TaskBatch

__all__ = [
    "HalfEstimates",
    "half_estimates",
    "moment_matrix",
    "moment_matrix_streamed",
    "estimate_subspace",
]

CHUNK_TASKS = 1024


@dataclass(frozen=True)
class HalfEstimates:
    """The two split-sample moment estimates (mean of y*x per half) of one task."""

    b1: np.ndarray
    b2: np.ndarray


def half_estimates(task: TaskBatch) -> HalfEstimates:
    """Split the task in half and average y_j x_j within each half.

    An odd trailing example is discarded so the halves stay independent;
    each half is normalized by its own size.
    """
    t = task.t
    if t < 2:
        raise ValueError("half estimates need at least 2 examples")
    h = t // 2
    b1 = task.X[:h].T @ task.y[:h] / h
    b2 = task.X[h : 2 * h].T @ task.y[h : 2 * h] / h
    return HalfEstimates(b1=b1, b2=b2)


def _halves_block(tasks: Sequence[TaskBatch]) -> tuple[np.ndarray, np.ndarray]:
    B1 = np.empty((len(tasks), tasks[0].d))
    B2 = np.empty_like(B1)
    for r, task in enumerate(tasks):
        est = half_estimates(task)
        B1[r] = est.b1
        B2[r] = est.b2
    return B1, B2


class _KahanMatrix:
    """Compensated accumulator for a stream of matrix addends."""

    def __init__(self, d: int):
        self.total = np.zeros((d, d))
        self.comp = np.zeros((d, d))

    def add(self, partial: np.ndarray) -> None:
        y = partial - self.comp
        t = self.total + y
        self.comp = (t - self.total) - y
        self.total = t


def _accumulate(
    partials: Iterable[tuple[np.ndarray, int]], d: int
) -> tuple[np.ndarray, int]:
    acc = _KahanMatrix(d)
    n = 0
    for partial, count in partials:
        acc.add(partial)
        n += count
    return acc.total, n


def moment_matrix(tasks: Sequence[TaskBatch], chunk: int = CHUNK_TASKS) -> SymMatrix:
    """(2n)^-1 sum_i (b1_i b2_i^T + b2_i b1_i^T) over the task collection.

    Accumulated chunk-by-chunk in task order with Kahan compensation across
    chunks, so the result is independent of how the work is partitioned.
    """
    tasks = list(tasks)
    if not tasks:
        raise ValueError("moment matrix needs at least one task")
    d = tasks[0].d

    def partials():
        for lo in range(0, len(tasks), chunk):
            B1, B2 = _halves_block(tasks[lo : lo + chunk])
            yield B1.T @ B2, len(B1)

    S, n = _accumulate(partials(), d)
    return SymMatrix((S + S.T) / (2.0 * n), check=False)


def moment_matrix_streamed(
    meta: MetaParams,
    n: int,
    t: int,
    seed: int,
    tag: int = TAG_L1,
    threads: int = 1,
    chunk: int = CHUNK_TASKS,
) -> SymMatrix:
    """Generate n fresh t-example tasks and accumulate their moment matrix
    without materializing the pool.

    Produces the same matrix as ``moment_matrix(pool.light1)`` for a pool
    drawn with the same (seed, tag): per-task streams and chunk boundaries
    are identical. Chunks may be computed on ``threads`` workers; partial
    sums are combined in chunk order, so the result does not depend on the
    worker count.
    """
    if n < 1:
        raise ValueError("need at least one task")

    def chunk_partial(lo: int) -> tuple[np.ndarray, int]:
        hi = min(lo + chunk, n)
        tasks = [sample_task(meta, t, task_rng(seed, tag, i)) for i in range(lo, hi)]
        B1, B2 = _halves_block(tasks)
        return B1.T @ B2, hi - lo

    starts = range(0, n, chunk)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(chunk_partial, starts)
            S, total = _accumulate(results, meta.d)
    else:
        S, total = _accumulate(map(chunk_partial, starts), meta.d)
    return SymMatrix((S + S.T) / (2.0 * total), check=False)


def estimate_subspace(tasks: Sequence[TaskBatch], k: int) -> Subspace:
    """Top-k eigenspace of the moment matrix."""
    M = moment_matrix(tasks)
    _, sub = top_k_eig(M, k)
    return sub
