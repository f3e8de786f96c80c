import numpy as np
import pytest

from mixlinreg.classify import classification_objectives, classify_task, refine
from mixlinreg.datagen import GenPreset, sample_meta_params, sample_pool
from mixlinreg.model import ClusterModel, TaskBatch
from oracles import classify_objective_oracle


def cluster_model(w_tilde, r2_tilde, n_tasks=None):
    k = w_tilde.shape[1]
    n_tasks = n_tasks or k
    assignments = {i: i % k for i in range(max(n_tasks, k))}
    return ClusterModel(
        assignments=assignments,
        w_tilde=w_tilde,
        r2_tilde=np.asarray(r2_tilde, float),
        p_tilde=np.full(k, 1.0 / k),
    )


class TestClassifyTask:
    def test_hand_case(self):
        model = cluster_model(np.array([[1.0, 0.0], [0.0, 1.0]]), [1.0, 1.0])
        task = TaskBatch(X=np.array([[1.0, 0.0]]), y=np.array([1.0]))
        obj = classification_objectives(task, model)
        np.testing.assert_allclose(obj, [0.0, 0.5])
        assert classify_task(task, model) == 0

    def test_single_cluster(self):
        model = cluster_model(np.array([[0.5], [0.0]]), [0.3])
        task = TaskBatch(X=np.array([[1.0, 2.0]]), y=np.array([-1.0]))
        assert classify_task(task, model) == 0

    @pytest.mark.parametrize("seed", range(200))
    def test_matches_objective_oracle(self, seed):
        rng = np.random.default_rng(seed)
        k, d, t = int(rng.integers(1, 5)), 3, int(rng.integers(1, 8))
        w = rng.standard_normal((d, k)) * 0.4
        r2 = rng.uniform(0.05, 2.0, size=k)
        model = cluster_model(w, r2)
        task = TaskBatch(X=rng.standard_normal((t, d)), y=rng.standard_normal(t))
        obj = classification_objectives(task, model)
        oracle = classify_objective_oracle(task, w, r2)
        np.testing.assert_allclose(obj, oracle, atol=1e-10)
        assert classify_task(task, model) == int(np.argmin(oracle))

    def test_example_permutation_invariance(self):
        rng = np.random.default_rng(5)
        model = cluster_model(rng.standard_normal((4, 3)) * 0.3, [0.5, 1.0, 2.0])
        X = rng.standard_normal((6, 4))
        y = rng.standard_normal(6)
        perm = rng.permutation(6)
        a = classification_objectives(TaskBatch(X=X, y=y), model)
        b = classification_objectives(TaskBatch(X=X[perm], y=y[perm]), model)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_equal_residuals_prefer_small_r_when_rss_small(self):
        # residual sums equal across clusters and below t*r2: penalty term
        # dominates, so the smallest r2 wins; verified against the oracle
        rng = np.random.default_rng(6)
        for _ in range(20):
            k = 3
            w = np.zeros((2, k))
            r2 = rng.uniform(0.5, 3.0, size=k)
            model = cluster_model(w, r2)
            task = TaskBatch(X=rng.standard_normal((4, 2)), y=0.1 * rng.standard_normal(4))
            rss = float(np.sum(task.y**2))
            if rss < task.t * r2.min():
                assert classify_task(task, model) == int(np.argmin(r2))

    def test_nonpositive_r2_rejected(self):
        model = cluster_model(np.zeros((2, 2)), [1.0, 1.0])
        object.__setattr__(model, "r2_tilde", np.array([1.0, 0.0]))
        task = TaskBatch(X=np.eye(2), y=np.ones(2))
        with pytest.raises(ValueError):
            classify_task(task, model)


class TestRefine:
    def test_noiseless_exact_fit(self):
        rng = np.random.default_rng(0)
        d = 3
        w = np.array([0.5, -0.2, 0.1])
        heavy = []
        for _ in range(3):
            X = rng.standard_normal((4, d))
            heavy.append(TaskBatch(X=X, y=X @ w))
        model = cluster_model(w[:, None] + 0.01, [0.2], n_tasks=3)
        fitted = refine(heavy, [[0, 1, 2]], [], model, d)
        np.testing.assert_allclose(fitted.W_hat[:, 0], w, atol=1e-10)
        assert fitted.s2_hat[0] == pytest.approx(0.0, abs=1e-20)
        assert not fitted.s2_valid[0]  # exact fit flags degenerate noise
        assert not fitted.p_valid  # no light tasks

    def test_noise_variance_concentration(self):
        rng = np.random.default_rng(1)
        d, s, m = 10, 0.5, 10_000
        w = rng.standard_normal(d) * 0.2
        X = rng.standard_normal((m, d))
        y = X @ w + s * rng.standard_normal(m)
        tasks = [TaskBatch(X=X[i : i + 100], y=y[i : i + 100]) for i in range(0, m, 100)]
        model = cluster_model(w[:, None], [s**2], n_tasks=len(tasks))
        fitted = refine(tasks, [list(range(len(tasks)))], [], model, d)
        assert abs(fitted.s2_hat[0] - s**2) < s**2 * 5 / np.sqrt(m - d)

    def test_p_hat_counts_light_assignments_only(self):
        rng = np.random.default_rng(2)
        d = 2
        w = np.array([[0.6, 0.0], [0.0, 0.6]])
        model = cluster_model(w, [0.05, 0.05], n_tasks=2)
        heavy = []
        for ell in range(2):
            X = rng.standard_normal((8, d))
            heavy.append(TaskBatch(X=X, y=X @ w[:, ell]))
        light = []
        for ell, count in ((0, 300), (1, 100)):
            for _ in range(count):
                X = rng.standard_normal((3, d))
                light.append(TaskBatch(X=X, y=X @ w[:, ell] + 0.05 * rng.standard_normal(3)))
        fitted = refine(heavy, [[0], [1]], light, model, d)
        np.testing.assert_allclose(fitted.p_hat, [0.75, 0.25])

    def test_underdetermined_cluster_flagged_not_fatal(self):
        rng = np.random.default_rng(3)
        d = 6
        w = rng.standard_normal((d, 1)) * 0.3
        heavy = [TaskBatch(X=rng.standard_normal((2, d)), y=rng.standard_normal(2))]
        model = cluster_model(w, [0.5], n_tasks=1)
        fitted = refine(heavy, [[0]], [], model, d)
        assert not fitted.s2_valid[0]
        assert np.isfinite(fitted.W_hat[:, 0]).all()
