"""Benchmark drivers: subspace error grids, minimum-t searches, and the
EM-vs-spectral comparison. Each returns a list of CSV-ready row dicts."""

from __future__ import annotations

import numpy as np
from numpy.random import SeedSequence

from ..cluster import consensus_cluster, initial_estimates
from ..classify import classify_task
from ..datagen import (
    TAG_H,
    TAG_L2,
    sample_meta_params,
    sample_pool,
    sample_task,
    task_rng,
)
from ..em import em_fit, em_init_perturbed
from ..eval import clustering_accuracy, estimation_error, subspace_error
from ..linalg import top_k_eig
from ..subspace import moment_matrix, moment_matrix_streamed
from .config import RunConfig
from .pipeline import _cluster_component_matching, spectral_fit

__all__ = [
    "derive_seed",
    "subspace_grid",
    "bench_subspace",
    "bench_tmin",
    "bench_em_compare",
]

ACCURACY_TARGET = 0.99


def derive_seed(seed: int, *parts) -> int:
    """A child seed deterministically derived from (seed, *parts)."""
    import zlib

    def stable(p):
        return p if isinstance(p, int) else zlib.crc32(repr(p).encode())

    entropy = (int(seed),) + tuple(stable(p) for p in parts)
    return int(SeedSequence(entropy).generate_state(1, np.uint64)[0])


def subspace_grid(config: RunConfig) -> list[tuple[int, int]]:
    """Doubling grid anchored at (t_l1, n_l1): three values of each,
    halving downward."""
    ts = sorted({max(2, config.t_l1 // 4), max(2, config.t_l1 // 2), config.t_l1})
    ns = sorted({max(1, config.n_l1 // 4), max(1, config.n_l1 // 2), config.n_l1})
    return [(t, n) for t in ts for n in ns]


def bench_subspace(
    config: RunConfig,
    seed: int = 0,
    threads: int = 1,
    grid: list[tuple[int, int]] | None = None,
) -> list[dict]:
    """Median subspace error per (t_l1, n_l1) grid cell over ``repeats``
    independent meta/data draws (draws are shared across cells)."""
    if grid is None:
        grid = subspace_grid(config)
    repeats = config.repeats
    rep_seeds = [derive_seed(seed, "subspace-rep", r) for r in range(repeats)]
    metas = [
        sample_meta_params(config.k, config.d, config.gen_preset, s)
        for s in rep_seeds
    ]
    rows = []
    for t, n in grid:
        errs = []
        for meta, rep_seed in zip(metas, rep_seeds):
            M = moment_matrix_streamed(meta, n, t, rep_seed, threads=threads)
            _, U = top_k_eig(M, config.k)
            errs.append(subspace_error(U, meta))
        rows.append(
            {
                "t_l1": t,
                "n_l1": n,
                "repeats": repeats,
                "median_subspace_error": float(np.median(errs)),
            }
        )
    return rows


def _cluster_trial_accuracy(config: RunConfig, trial_seed: int, t: int, cache: dict) -> float:
    """Clustering accuracy of one trial at heavy-task size t; the subspace
    is estimated once per trial and reused across candidate sizes."""
    if "U" not in cache:
        meta = sample_meta_params(config.k, config.d, config.gen_preset, trial_seed)
        M = moment_matrix_streamed(meta, config.n_l1, config.t_l1, trial_seed)
        _, U = top_k_eig(M, config.k)
        cache.update(meta=meta, U=U)
    meta, U = cache["meta"], cache["U"]
    heavy = [
        sample_task(meta, t, task_rng(trial_seed, TAG_H, i))
        for i in range(config.n_h)
    ]
    partition = consensus_cluster(heavy, U, config.k)
    return clustering_accuracy(partition, heavy)


def _classify_trial_accuracy(config: RunConfig, trial_seed: int, t: int, cache: dict) -> float:
    """Classification accuracy of one trial at light-task size t; subspace
    and clusters are built once per trial at the configured t_h."""
    if "cmodel" not in cache:
        meta = sample_meta_params(config.k, config.d, config.gen_preset, trial_seed)
        M = moment_matrix_streamed(meta, config.n_l1, config.t_l1, trial_seed)
        _, U = top_k_eig(M, config.k)
        heavy = [
            sample_task(meta, config.t_h, task_rng(trial_seed, TAG_H, i))
            for i in range(config.n_h)
        ]
        partition = consensus_cluster(heavy, U, config.k)
        cmodel = initial_estimates(heavy, partition, U)
        mapping = _cluster_component_matching(partition, heavy, config.k)
        cache.update(meta=meta, cmodel=cmodel, mapping=mapping)
    meta, cmodel, mapping = cache["meta"], cache["cmodel"], cache["mapping"]
    light2 = [
        sample_task(meta, t, task_rng(trial_seed, TAG_L2, i))
        for i in range(config.n_l2)
    ]
    correct = sum(
        1
        for task in light2
        if mapping[classify_task(task, cmodel)] == task.true_component
    )
    return correct / len(light2)


def bench_tmin(
    stage: str,
    config: RunConfig,
    seed: int = 0,
    threads: int = 1,
) -> list[dict]:
    """Smallest per-task example count t reaching >=99% stage accuracy in a
    target fraction of trials; reported at the configured confidence and
    at 0.5. The search range is [2, t_h] for clustering and [1, t_l2] for
    classification; an exhausted range is reported as censored."""
    if stage == "cluster":
        evaluate, t_lo, t_hi = _cluster_trial_accuracy, 2, config.t_h
    elif stage == "classify":
        evaluate, t_lo, t_hi = _classify_trial_accuracy, 1, config.t_l2
    else:
        raise ValueError(f"unknown stage {stage!r}")

    trials = config.trials
    trial_seeds = [derive_seed(seed, "tmin-trial", stage, j) for j in range(trials)]
    caches = [dict() for _ in range(trials)]
    fractions: dict[int, float] = {}

    def success_fraction(t: int) -> float:
        if t not in fractions:
            hits = sum(
                evaluate(config, trial_seeds[j], t, caches[j]) >= ACCURACY_TARGET
                for j in range(trials)
            )
            fractions[t] = hits / trials
        return fractions[t]

    rows = []
    for conf in (config.confidence, 0.5):
        if success_fraction(t_hi) < conf:
            rows.append(
                {"stage": stage, "k": config.k, "confidence": conf,
                 "trials": trials, "t_min": "", "censored": True}
            )
            continue
        lo, hi = t_lo, t_hi  # invariant: hi succeeds
        while lo < hi:
            mid = (lo + hi) // 2
            if success_fraction(mid) >= conf:
                hi = mid
            else:
                lo = mid + 1
        rows.append(
            {"stage": stage, "k": config.k, "confidence": conf,
             "trials": trials, "t_min": hi, "censored": False}
        )
    return rows


def bench_em_compare(
    config: RunConfig,
    seed: int = 0,
    threads: int = 1,
    gamma2_grid: tuple[float, ...] | None = None,
) -> list[dict]:
    """Fit EM (perturbed-truth init per gamma^2) and the spectral pipeline
    on one shared pool; report both final estimation errors."""
    if gamma2_grid is None:
        gamma2_grid = config.gamma2_grid
    meta = sample_meta_params(config.k, config.d, config.gen_preset, seed)
    pool = sample_pool(meta, config.pool_sizes, seed)

    fit = spectral_fit(
        meta,
        config,
        seed,
        threads=threads,
        light1_tasks=pool.light1,
        heavy_tasks=pool.heavy,
        light2_tasks=pool.light2,
    )
    spectral_err = fit.metrics["estimation_error"]

    all_tasks = list(pool.light1) + list(pool.heavy) + list(pool.light2)
    rows = []
    for gamma2 in gamma2_grid:
        init = em_init_perturbed(meta, gamma2, seed, exact=(gamma2 == 0.0))
        model, state = em_fit(
            all_tasks,
            init,
            max_iters=config.em_max_iters,
            tol=config.em_tol,
            return_state=True,
        )
        em_err = estimation_error(model, meta, config.t_l2)
        trace = state.log_likelihood_trace
        monotone = all(
            b >= a - 1e-8 for a, b in zip(trace, trace[1:])
        )
        rows.append(
            {
                "gamma2": gamma2,
                "em_error": em_err,
                "spectral_error": spectral_err,
                "em_iterations": len(trace),
                "em_converged": state.converged,
                "em_monotone": monotone,
                # operational definition of a failed EM run
                "em_failed": bool(em_err > 0.5 or not monotone),
            }
        )
    return rows
