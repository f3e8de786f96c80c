"""EM baseline for mixed linear regression over multi-example tasks.

Responsibilities live at the task level (the latent component is drawn
once per task). The M-step solves a responsibility-weighted least-squares
problem per component: exactly via Cholesky on the weighted Gram matrix
at small scale, and via warm-started conjugate gradients on the implicit
normal equations at benchmark scale, where forming k dense Grams per
iteration would dominate the runtime.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datagen import TAG_EM_INIT, task_rng
from .model import FittedModel, MetaParams, TaskBatch

__all__ = ["EmState", "em_init_perturbed", "em_fit"]

S2_FLOOR = 1e-10
# below this exact-Gram flop count the M-step forms the Grams explicitly
EXACT_MSTEP_FLOPS = 4e10
CG_RTOL = 1e-11
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class EmState:
    """Final model plus the diagnostics of one EM run."""

    model: FittedModel
    responsibilities: np.ndarray  # (n, k), rows on the simplex
    log_likelihood_trace: list[float] = field(default_factory=list)
    converged: bool = False
    collapsed: np.ndarray | None = None  # (k,) bool


def em_init_perturbed(
    truth: MetaParams, gamma2: float, seed: int, exact: bool = False
) -> FittedModel:
    """Perturbed-truth initialization.

    W0 adds N(0, gamma2) noise per entry and projects each column onto the
    unit ball; s0 = |s + N(0, 0.1 I)|; p0 = |p + N(0, I/k)| renormalized to
    the simplex. ``exact`` short-circuits every perturbation (including the
    s and p noise) so the init equals the truth.
    """
    if gamma2 < 0:
        raise ValueError("gamma2 must be >= 0")
    if exact:
        return FittedModel.from_truth(truth)
    rng = task_rng(seed, TAG_EM_INIT, 0)
    d, k = truth.d, truth.k
    Z = np.sqrt(gamma2) * rng.standard_normal((d, k))
    W0 = truth.W + Z
    norms = np.linalg.norm(W0, axis=0)
    W0 = W0 / np.maximum(norms, 1.0)
    q = truth.s + np.sqrt(0.1) * rng.standard_normal(k)
    s0 = np.abs(q)
    z = truth.p + rng.standard_normal(k) / np.sqrt(k)
    z = np.abs(z)
    p0 = z / z.sum()
    return FittedModel(W_hat=W0, s2_hat=np.maximum(s0**2, S2_FLOOR), p_hat=p0)


def _stack(tasks) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    X = np.vstack([task.X for task in tasks])
    y = np.concatenate([task.y for task in tasks])
    t = np.array([task.t for task in tasks])
    offsets = np.concatenate([[0], np.cumsum(t)[:-1]])
    return X, y, t, offsets


def _log_responsibilities(task_rss, t, s2, p):
    return (
        np.log(np.maximum(p, 1e-300))
        - 0.5 * t[:, None] * np.log(s2)[None, :]
        - task_rss / (2.0 * s2)[None, :]
    )


def _mean_log_likelihood(log_resp, t) -> float:
    m = log_resp.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(log_resp - m).sum(axis=1))
    return float(np.mean(lse - 0.5 * t * LOG_2PI))


def _solve_weighted_ls_exact(X, y, w_ex, W_prev, solvable):
    d, k = W_prev.shape
    W = W_prev.copy()
    for ell in range(k):
        if not solvable[ell]:
            continue
        Xw = X * w_ex[:, ell : ell + 1]
        G = X.T @ Xw
        b = Xw.T @ y
        try:
            W[:, ell] = np.linalg.solve(G, b)
        except np.linalg.LinAlgError:
            W[:, ell] = np.linalg.lstsq(G, b, rcond=None)[0]
    return W


def _solve_weighted_ls_cg(
    X, y, w_ex, W_prev, solvable, gram_chol=None, rtol=CG_RTOL, max_iter=None
):
    """Lockstep per-component PCG on X^T diag(w) X w = X^T diag(w) y.

    For isotropic inputs every weighted Gram is close to a scaled copy of
    X^T X, so a single Cholesky factor of X^T X preconditions all k systems
    at once. Active components share each matvec through two dense
    products; converged columns drop out so a slow component only pays for
    itself. Warm-started from the previous estimate.
    """
    from scipy.linalg import cho_solve

    d, k = W_prev.shape
    if max_iter is None:
        # well-weighted components converge in ~10 preconditioned steps;
        # only near-collapsed ones would use more, and their fit is moot
        max_iter = 60

    B = X.T @ (w_ex * y[:, None])  # (d, k)
    W = W_prev.copy()
    cols = np.flatnonzero(solvable)
    if cols.size == 0:
        return W

    def matvec(V, idx):
        T = X @ V  # (N, |idx|)
        T *= w_ex[:, idx]
        return X.T @ T

    def precondition(R):
        if gram_chol is None:
            return R.copy()
        return cho_solve(gram_chol, R)

    R = B[:, cols] - matvec(W[:, cols], cols)
    Z = precondition(R)
    P = Z.copy()
    rz = (R * Z).sum(axis=0)
    rs = (R * R).sum(axis=0)
    tol2 = (rtol**2) * np.maximum((B[:, cols] ** 2).sum(axis=0), 1e-300)

    for _ in range(max_iter):
        keep = rs > tol2
        if not keep.all():
            if not keep.any():
                break
            cols, R, P, rz, rs, tol2 = (
                cols[keep],
                R[:, keep],
                P[:, keep],
                rz[keep],
                rs[keep],
                tol2[keep],
            )
        AP = matvec(P, cols)
        pap = (P * AP).sum(axis=0)
        stalled = pap <= 0.0
        alpha = np.where(stalled, 0.0, rz / np.maximum(pap, 1e-300))
        W[:, cols] += alpha * P
        R -= alpha * AP
        Z = precondition(R)
        rz_new = (R * Z).sum(axis=0)
        beta = np.where(stalled, 0.0, rz_new / np.maximum(rz, 1e-300))
        P = Z + beta * P
        rz = rz_new
        rs = np.where(stalled, 0.0, (R * R).sum(axis=0))
    return W


def em_fit(
    tasks,
    init: FittedModel,
    max_iters: int = 500,
    tol: float = 1e-7,
    return_state: bool = False,
):
    """Run EM from the given initialization.

    E-step: per-task log responsibilities log p_l - t_i log s_l -
    RSS_il / (2 s_l^2), normalized by log-sum-exp. M-step:
    responsibility-weighted least squares per component, weighted RSS over
    weighted example count for the noise, mean responsibility for the
    mixing weights. Stops when the per-task mean log-likelihood improves
    by less than ``tol``. A component whose weighted example count drops
    below d is frozen and flagged; such a run is marked non-converged.
    """
    tasks = list(tasks)
    if np.any(init.s2_hat <= 0):
        raise ValueError("init must have strictly positive noise variances")
    X, y, t, offsets = _stack(tasks)
    N, d = X.shape
    k = init.k
    n = len(tasks)

    W = init.W_hat.copy()
    s2 = init.s2_hat.copy()
    p = init.p_hat.copy()
    collapsed = np.zeros(k, dtype=bool)
    trace: list[float] = []
    converged = False
    resp = np.full((n, k), 1.0 / k)
    use_exact = float(N) * d * d * k <= EXACT_MSTEP_FLOPS
    gram_chol = None
    if not use_exact:
        from scipy.linalg import cho_factor

        gram_chol = cho_factor(X.T @ X + 1e-9 * np.eye(d))

    for _ in range(max_iters):
        # E-step
        pred = X @ W  # (N, k)
        sq = (y[:, None] - pred) ** 2
        task_rss = np.add.reduceat(sq, offsets, axis=0)
        log_resp = _log_responsibilities(task_rss, t, s2, p)
        ll = _mean_log_likelihood(log_resp, t)
        m = log_resp.max(axis=1, keepdims=True)
        resp = np.exp(log_resp - m)
        resp /= resp.sum(axis=1, keepdims=True)

        if trace and ll - trace[-1] < tol:
            trace.append(ll)
            converged = True
            break
        trace.append(ll)

        # M-step
        w_ex = np.repeat(resp, t, axis=0)  # (N, k)
        weighted_count = w_ex.sum(axis=0)
        newly_collapsed = weighted_count < d
        collapsed |= newly_collapsed
        solvable = ~newly_collapsed
        if use_exact:
            W = _solve_weighted_ls_exact(X, y, w_ex, W, solvable)
        else:
            W = _solve_weighted_ls_cg(X, y, w_ex, W, solvable, gram_chol=gram_chol)
        pred = X @ W
        wrss = (w_ex * (y[:, None] - pred) ** 2).sum(axis=0)
        s2 = np.where(
            solvable,
            np.maximum(wrss / np.maximum(weighted_count, 1e-300), S2_FLOOR),
            s2,
        )
        p = resp.mean(axis=0)

    if collapsed.any():
        converged = False

    model = FittedModel(
        W_hat=W, s2_hat=s2, p_hat=p, s2_valid=(~collapsed) & (s2 > 0)
    )
    if return_state:
        return model, EmState(
            model=model,
            responsibilities=resp,
            log_likelihood_trace=trace,
            converged=converged,
            collapsed=collapsed,
        )
    return model, trace
