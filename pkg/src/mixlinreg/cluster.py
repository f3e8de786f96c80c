"""Clustering of heavy tasks from a median-boosted pairwise distance matrix.

Each task's examples are cut into 2L disjoint blocks; block l pairs with
block l+L so the two factors of every inner-product estimate are
independent. The median over the L batch estimates makes the pairwise
distance robust, after which single-linkage agglomeration down to k
clusters recovers the components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .model import ClusterModel, Subspace, TaskBatch

__all__ = [
    "BatchEstimates",
    "DistanceMatrix",
    "auto_num_batches",
    "batch_estimates",
    "pairwise_distance",
    "median",
    "single_linkage",
    "projected_estimates",
    "consensus_cluster",
    "initial_estimates",
]


@dataclass(frozen=True)
class BatchEstimates:
    """2L projected block means gamma^(l) = U^T (mean of y x over block l)."""

    gamma: np.ndarray  # (2L, k)

    @property
    def num_batches(self) -> int:
        return self.gamma.shape[0] // 2


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise distance estimates with zero diagonal."""

    H: np.ndarray  # (n, n)
    L: int

    def __post_init__(self):
        H = self.H
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("H must be square")
        if np.abs(np.diag(H)).max(initial=0.0) != 0.0:
            raise ValueError("H must have a zero diagonal")

    @property
    def n(self) -> int:
        return self.H.shape[0]


def auto_num_batches(n_h: int, t_h: int, k: int, delta: float = 0.05) -> int:
    """Default number of median batches: ceil(log2(n_H / delta)), capped so
    every block keeps at least max(1, ceil(sqrt(k))) examples."""
    want = max(1, math.ceil(math.log2(max(n_h, 2) / delta)))
    block = max(1, math.ceil(math.sqrt(k)))
    cap = max(1, t_h // (2 * block))
    return min(want, cap)


def batch_estimates(task: TaskBatch, U: Subspace, L: int) -> BatchEstimates:
    """Projected moment estimates of one task over 2L disjoint blocks.

    The first 2L*floor(t/2L) examples form consecutive blocks of equal
    size; trailing examples are left for the estimation stage.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    t = task.t
    m = t // (2 * L)
    if m < 1:
        raise ValueError(f"task has t={t} < 2L={2 * L} examples")
    used = 2 * L * m
    yx = task.X[:used] * task.y[:used, None]  # (used, d)
    block_means = yx.reshape(2 * L, m, -1).mean(axis=1)
    return BatchEstimates(gamma=block_means @ U.U)


def pairwise_distance(
    tasks: Sequence[TaskBatch], U: Subspace, L: int
) -> DistanceMatrix:
    """Median over batches of the paired-block inner products, per task pair."""
    tasks = list(tasks)
    if not tasks:
        raise ValueError("need at least one task")
    n = len(tasks)
    k = U.k
    gamma = np.empty((n, 2 * L, k))
    for i, task in enumerate(tasks):
        gamma[i] = batch_estimates(task, U, L).gamma
    g1 = np.ascontiguousarray(gamma[:, :L, :])
    g2 = np.ascontiguousarray(gamma[:, L:, :])
    H = kernels.pairwise_median_inner(g1, g2)
    return DistanceMatrix(H=H, L=L)


def median(values) -> float:
    """Middle order statistic; mean of the two middle values for even length."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("median of an empty collection")
    return float(np.median(values))


def single_linkage(H: DistanceMatrix | np.ndarray, k: int) -> list[list[int]]:
    """Agglomerate to exactly k clusters under the single-linkage distance.

    Ties are broken toward the lexicographically smallest task pair (i, j),
    implemented by merging edges in sorted (distance, i, j) order. Clusters
    are returned sorted by their smallest member.
    """
    A = H.H if isinstance(H, DistanceMatrix) else np.asarray(H)
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    iu, ju = np.triu_indices(n, 1)
    dist = A[iu, ju]
    order = np.lexsort((ju, iu, dist))
    labels = kernels.union_find_merge(iu[order], ju[order], n, k)
    clusters: list[list[int]] = [[] for _ in range(int(labels.max()) + 1)]
    for idx, lab in enumerate(labels):
        clusters[lab].append(idx)
    return clusters


def projected_estimates(tasks: Sequence[TaskBatch], U: Subspace) -> np.ndarray:
    """Full-sample projected moment estimate U^T (mean of y x) per task."""
    G = np.empty((len(tasks), U.k))
    for i, task in enumerate(tasks):
        G[i] = (task.X.T @ task.y / task.t) @ U.U
    return G


def _sqdist(G: np.ndarray) -> np.ndarray:
    n2 = (G * G).sum(axis=1)
    D = n2[:, None] + n2[None, :] - 2.0 * G @ G.T
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def consensus_cluster(
    tasks: Sequence[TaskBatch],
    U: Subspace,
    k: int,
    knn: int | None = None,
    lloyd_iters: int = 8,
) -> list[list[int]]:
    """Partition heavy tasks into k clusters by neighborhood consensus.

    Pairwise statistics of few-example tasks have tails heavy enough that a
    raw minimum-linkage merge chains clusters together, so each projected
    estimate is first averaged with its nearest neighbors; single linkage
    on the smoothed distances seeds the k groups, and a few deterministic
    nearest-center iterations on the raw estimates refine the assignment.
    """
    tasks = list(tasks)
    n = len(tasks)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n_h, got k={k}, n_h={n}")
    G = projected_estimates(tasks, U)
    if knn is None:
        knn = int(min(8, max(1, n // (2 * k))))
    D = _sqdist(G)
    nn = np.argsort(D, axis=1, kind="stable")[:, :knn]  # self included (D_ii = 0)
    G_smooth = G[nn].mean(axis=1)
    seeds = single_linkage(_sqdist(G_smooth), k)

    centers = np.stack([G[members].mean(axis=0) for members in seeds])
    assign = np.empty(n, dtype=np.int64)
    for c, members in enumerate(seeds):
        assign[members] = c
    for _ in range(lloyd_iters):
        dist = ((G[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dist.argmin(axis=1)
        for c in range(k):
            if not np.any(new_assign == c):
                # reseed an emptied center at the worst-fit point
                far = int(np.argmax(dist[np.arange(n), new_assign]))
                new_assign[far] = c
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            centers[c] = G[assign == c].mean(axis=0)
    return [list(np.flatnonzero(assign == c)) for c in range(k)]


def initial_estimates(
    tasks: Sequence[TaskBatch], partition: Sequence[Sequence[int]], U: Subspace
) -> ClusterModel:
    """Rough per-cluster estimates from the heavy tasks.

    Each task is split in half: first halves pool into the projected mean
    w_tilde, second halves (fresh samples) into the residual scale
    r2_tilde, so r2_tilde estimates s^2 + ||w_tilde - w||^2 without the
    downward bias of reusing samples. p_tilde is the cluster share of
    tasks.
    """
    tasks = list(tasks)
    k = len(partition)
    if k < 1 or any(len(c) == 0 for c in partition):
        raise ValueError("partition must have only nonempty clusters")
    d = tasks[0].d
    n = len(tasks)

    w_tilde = np.empty((d, k))
    r2_tilde = np.empty(k)
    p_tilde = np.empty(k)
    assignments: dict[int, int] = {}

    for ell, members in enumerate(partition):
        acc = np.zeros(d)
        count = 0
        for i in members:
            assignments[i] = ell
            task = tasks[i]
            h = task.t // 2
            if h < 1:
                continue
            acc += task.X[:h].T @ task.y[:h]
            count += h
        if count == 0:
            raise ValueError(f"cluster {ell} has no usable first-half examples")
        w = U.project(acc / count)
        rss = 0.0
        rcount = 0
        for i in members:
            task = tasks[i]
            h = task.t // 2
            resid = task.y[h:] - task.X[h:] @ w
            rss += float(resid @ resid)
            rcount += task.t - h
        if rcount == 0:
            raise ValueError(f"cluster {ell} has no usable second-half examples")
        w_tilde[:, ell] = w
        r2_tilde[ell] = rss / rcount
        p_tilde[ell] = len(members) / n

    return ClusterModel(
        assignments=assignments, w_tilde=w_tilde, r2_tilde=r2_tilde, p_tilde=p_tilde
    )
