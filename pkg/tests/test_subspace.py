import numpy as np
import pytest

from mixlinreg.datagen import GenPreset, sample_meta_params, sample_pool
from mixlinreg.linalg import top_k_eig
from mixlinreg.model import MetaParams, TaskBatch
from mixlinreg.subspace import (
    estimate_subspace,
    half_estimates,
    moment_matrix,
    moment_matrix_streamed,
)
from oracles import moment_matrix_oracle


def two_example_task():
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    y = np.array([1.0, 2.0])
    return TaskBatch(X=X, y=y)


class TestHalfEstimates:
    def test_single_example_halves(self):
        est = half_estimates(two_example_task())
        np.testing.assert_allclose(est.b1, [1.0, 0.0])
        np.testing.assert_allclose(est.b2, [0.0, 2.0])

    def test_odd_trailing_example_dropped(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0], [5.0, 5.0]])
        y = np.array([1.0, 2.0, 99.0])
        est = half_estimates(TaskBatch(X=X, y=y))
        np.testing.assert_allclose(est.b1, [1.0, 0.0])
        np.testing.assert_allclose(est.b2, [0.0, 2.0])

    def test_needs_two_examples(self):
        with pytest.raises(ValueError):
            half_estimates(TaskBatch(X=np.ones((1, 2)), y=np.ones(1)))

    def test_noiseless_accuracy_rate(self):
        d, t = 8, 10_000
        rng = np.random.default_rng(0)
        w = np.zeros(d)
        w[0] = 1.0
        X = rng.standard_normal((t, d))
        task = TaskBatch(X=X, y=X @ w)
        est = half_estimates(task)
        assert np.linalg.norm(est.b1 - w) < 3 * np.sqrt(d / (t / 2))


class TestMomentMatrix:
    def test_hand_computed_single_task(self):
        M = moment_matrix([two_example_task()])
        np.testing.assert_allclose(M.data, [[0.0, 1.0], [1.0, 0.0]])

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_double_loop_oracle(self, seed):
        rng = np.random.default_rng(seed)
        tasks = [
            TaskBatch(X=rng.standard_normal((t, 5)), y=rng.standard_normal(t))
            for t in rng.integers(2, 9, size=40)
        ]
        M = moment_matrix(tasks, chunk=7)
        np.testing.assert_allclose(M.data, moment_matrix_oracle(tasks), atol=1e-12)

    def test_unbiased_monte_carlo(self):
        # k=1, w = 0.8 e1, noiseless, t=2: E[M_hat] = w w^T
        d, n = 8, 100_000
        w = np.zeros(d)
        w[0] = 0.8
        meta = MetaParams(W=w[:, None], s=np.array([1e-9]), p=np.array([1.0]))
        pool = sample_pool(meta, (n, 2, 1, 2, 1, 2), seed=5)
        M = moment_matrix(pool.light1)
        assert np.linalg.norm(M.data - np.outer(w, w), 2) <= 0.05

    def test_task_permutation_invariance(self):
        rng = np.random.default_rng(9)
        tasks = [
            TaskBatch(X=rng.standard_normal((4, 3)), y=rng.standard_normal(4))
            for _ in range(10)
        ]
        M1 = moment_matrix(tasks)
        M2 = moment_matrix(tasks[::-1])
        np.testing.assert_allclose(M1.data, M2.data, atol=1e-15)

    def test_y_scaling_scales_matrix_not_projector(self):
        rng = np.random.default_rng(10)
        meta = sample_meta_params(2, 6, GenPreset(kind="orthonormal"), seed=3)
        pool = sample_pool(meta, (400, 4, 1, 2, 1, 2), seed=4)
        tasks = list(pool.light1)
        scaled = [TaskBatch(X=t.X, y=3.0 * t.y) for t in tasks]
        M1 = moment_matrix(tasks)
        M2 = moment_matrix(scaled)
        np.testing.assert_allclose(M2.data, 9.0 * M1.data, rtol=1e-12)
        _, s1 = top_k_eig(M1, 2)
        _, s2 = top_k_eig(M2, 2)
        np.testing.assert_allclose(
            s1.U @ s1.U.T, s2.U @ s2.U.T, atol=1e-8
        )

    def test_empty_collection_rejected(self):
        with pytest.raises(ValueError):
            moment_matrix([])


class TestEstimateSubspace:
    def test_exact_moment_recovery(self):
        # bypass sampling: eigenvectors of the exact M recover each w
        rng = np.random.default_rng(2)
        d, k = 10, 3
        Q, _ = np.linalg.qr(rng.standard_normal((d, k)))
        W = 0.6 * Q
        M = (W * np.full(k, 1 / k)) @ W.T
        _, sub = top_k_eig(M, k)
        for i in range(k):
            w = W[:, i]
            assert np.linalg.norm(sub.project(w) - w) <= 1e-8

    def test_estimate_subspace_runs(self):
        meta = sample_meta_params(2, 8, GenPreset(kind="orthonormal"), seed=1)
        pool = sample_pool(meta, (500, 4, 1, 2, 1, 2), seed=2)
        sub = estimate_subspace(pool.light1, 2)
        assert sub.U.shape == (8, 2)


class TestStreamedMomentMatrix:
    def test_matches_pool_route(self):
        meta = sample_meta_params(2, 6, GenPreset(kind="orthonormal"), seed=7)
        pool = sample_pool(meta, (300, 4, 1, 2, 1, 2), seed=7)
        M_pool = moment_matrix(pool.light1)
        M_stream = moment_matrix_streamed(meta, 300, 4, 7)
        np.testing.assert_array_equal(M_pool.data, M_stream.data)

    def test_thread_count_invariance(self):
        meta = sample_meta_params(2, 6, GenPreset(kind="orthonormal"), seed=8)
        M1 = moment_matrix_streamed(meta, 2500, 4, 8, threads=1, chunk=256)
        M2 = moment_matrix_streamed(meta, 2500, 4, 8, threads=3, chunk=256)
        np.testing.assert_array_equal(M1.data, M2.data)
