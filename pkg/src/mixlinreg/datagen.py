"""Seeded synthetic generation of meta-parameters and task pools.

Randomness is derived from the counter-based Philox generator. Every task
gets its own stream, identified by ``SeedSequence(seed, spawn_key=(tag,
index))`` where ``tag`` names the dataset (meta sampling, light-1, heavy,
light-2, prediction trials, EM init). Generation is therefore pure in
(seed, tag, index): tasks can be produced in any order, on any number of
workers, with identical output.

Within one task the draw order is fixed: the component label first (one
uniform, inverted through the mixing-weight CDF), then a single (t, d+1)
standard-normal block whose first d columns are X and last column the
noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .model import MetaParams, TaskBatch, TaskPool

__all__ = [
    "GenPreset",
    "task_rng",
    "sample_meta_params",
    "sample_task",
    "sample_pool",
    "TAG_META",
    "TAG_L1",
    "TAG_H",
    "TAG_L2",
    "TAG_PREDICT",
    "TAG_EM_INIT",
]

TAG_META = 0
TAG_L1 = 1
TAG_H = 2
TAG_L2 = 3
TAG_PREDICT = 4
TAG_EM_INIT = 5

PRESET_KINDS = ("orthonormal", "random-unit", "lower-bound")


@dataclass(frozen=True)
class GenPreset:
    """Recipe for ground-truth parameters.

    orthonormal: W^T W = I_k orthonormal columns and unit noise scales,
        jointly rescaled by 1/sqrt(2) so that rho = 1 exactly.
    random-unit: columns uniform on the sphere, noise scale ``sigma``,
        rescaled so rho = 1.
    lower-bound: w_i = (delta/sqrt(2)) e_i, s_i = sigma, uniform p; the
        hard instance for few-shot prediction. Rescaled only if rho > 1.
    """

    kind: str = "orthonormal"
    delta: float = 1.0
    sigma: float = 0.5

    def __post_init__(self):
        if self.kind not in PRESET_KINDS:
            raise ValueError(f"unknown preset kind {self.kind!r}")
        if self.delta <= 0 or self.sigma <= 0:
            raise ValueError("delta and sigma must be positive")


def task_rng(seed: int, tag: int, index: int) -> Generator:
    """The Philox stream for task ``index`` of dataset ``tag``."""
    return Generator(Philox(SeedSequence(seed, spawn_key=(tag, index))))


def sample_meta_params(
    k: int, d: int, preset: GenPreset, seed: int
) -> MetaParams:
    """Draw ground-truth (W, s, p) for the given preset, normalized to rho=1."""
    if not 1 <= k <= d:
        raise ValueError(f"need d >= k >= 1, got k={k}, d={d}")
    rng = task_rng(seed, TAG_META, 0)

    if preset.kind == "orthonormal":
        G = rng.standard_normal((d, k))
        Q, R = np.linalg.qr(G)
        Q = Q * np.sign(np.diag(R))  # fix the QR sign ambiguity
        c = 1.0 / np.sqrt(2.0)
        W = c * Q
        s = np.full(k, c)
        p = np.full(k, 1.0 / k)
    elif preset.kind == "random-unit":
        G = rng.standard_normal((d, k))
        W = G / np.linalg.norm(G, axis=0)
        s = np.full(k, preset.sigma)
        scale = 1.0 / np.sqrt(1.0 + preset.sigma**2)
        W = W * scale
        s = s * scale
        p = np.full(k, 1.0 / k)
    else:  # lower-bound
        W = np.zeros((d, k))
        W[np.arange(k), np.arange(k)] = preset.delta / np.sqrt(2.0)
        s = np.full(k, preset.sigma)
        p = np.full(k, 1.0 / k)
        rho = float(np.sqrt((W**2).sum(axis=0) + s**2).max())
        if rho > 1.0:
            W = W / rho
            s = s / rho

    return MetaParams(W=W, s=s, p=p)


def sample_task(
    meta: MetaParams,
    t: int,
    rng: Generator,
    x_dist: str = "gaussian",
) -> TaskBatch:
    """Draw one task: component label, t isotropic inputs, noisy labels.

    ``x_dist`` is "gaussian" (default) or "rademacher"; the noise is always
    Gaussian with the component's scale.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    z = int(np.searchsorted(np.cumsum(meta.p), rng.random(), side="right"))
    z = min(z, meta.k - 1)  # guard the u == 1 edge
    block = rng.standard_normal((t, meta.d + 1))
    if x_dist == "gaussian":
        X = block[:, : meta.d]
    elif x_dist == "rademacher":
        X = np.where(block[:, : meta.d] >= 0.0, 1.0, -1.0)
    else:
        raise ValueError(f"unknown x_dist {x_dist!r}")
    y = X @ meta.W[:, z] + meta.s[z] * block[:, meta.d]
    return TaskBatch(X=X, y=y, true_component=z)


@dataclass(frozen=True)
class PoolSizes:
    n_l1: int
    t_l1: int
    n_h: int
    t_h: int
    n_l2: int
    t_l2: int

    def __post_init__(self):
        for name in ("n_l1", "t_l1", "n_h", "t_h", "n_l2", "t_l2"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.t_l1 < 2:
            raise ValueError("t_l1 must be >= 2")


def sample_pool(
    meta: MetaParams,
    sizes: PoolSizes | tuple[int, int, int, int, int, int],
    seed: int,
    x_dist: str = "gaussian",
) -> TaskPool:
    """Draw the three datasets with independently derived per-task streams."""
    if not isinstance(sizes, PoolSizes):
        sizes = PoolSizes(*sizes)

    def draw(tag: int, n: int, t: int) -> tuple[TaskBatch, ...]:
        return tuple(
            sample_task(meta, t, task_rng(seed, tag, i), x_dist=x_dist)
            for i in range(n)
        )

    return TaskPool(
        light1=draw(TAG_L1, sizes.n_l1, sizes.t_l1),
        heavy=draw(TAG_H, sizes.n_h, sizes.t_h),
        light2=draw(TAG_L2, sizes.n_l2, sizes.t_l2),
    )
