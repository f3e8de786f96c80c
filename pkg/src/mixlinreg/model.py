"""Domain types for the mixed-linear-regression meta-learning pipeline.

All types are immutable after construction (arrays are marked read-only)
and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MetaParams",
    "TaskBatch",
    "TaskPool",
    "Subspace",
    "ClusterModel",
    "FittedModel",
    "MetaParamsError",
    "validate_meta",
]

SIMPLEX_TOL = 1e-12
RHO_TOL = 1e-9
ORTHO_TOL = 1e-10
# eigenvalues below this fraction of rho^2 count as zero when computing
# the smallest nonzero eigenvalue of sum_j p_j w_j w_j^T
LAMBDA_MIN_CUTOFF = 1e-9


class MetaParamsError(ValueError):
    """Raised when meta-parameters violate their invariants.

    ``codes`` lists every violated invariant, not just the first.
    """

    def __init__(self, codes: list[str], details: list[str]):
        self.codes = codes
        super().__init__("; ".join(details))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MetaParams:
    """Ground-truth mixture of k linear-regression components in d dims.

    W[:, i] is the regression vector of component i, s[i] its noise scale,
    p[i] its mixing weight. Construction validates the invariants; use the
    derived properties for separation/scale summaries.
    """

    W: np.ndarray  # (d, k)
    s: np.ndarray  # (k,)
    p: np.ndarray  # (k,)

    def __post_init__(self):
        object.__setattr__(self, "W", _freeze(np.atleast_2d(self.W)))
        object.__setattr__(self, "s", _freeze(np.atleast_1d(self.s)))
        object.__setattr__(self, "p", _freeze(np.atleast_1d(self.p)))
        validate_meta(self)

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def k(self) -> int:
        return self.W.shape[1]

    @property
    def delta(self) -> float:
        """Minimum pairwise distance between component regression vectors."""
        if self.k < 2:
            return float("inf")
        diffs = self.W[:, :, None] - self.W[:, None, :]
        dist = np.sqrt((diffs**2).sum(axis=0))
        iu = np.triu_indices(self.k, 1)
        return float(dist[iu].min())

    @property
    def rho(self) -> float:
        """Uniform bound max_i sqrt(s_i^2 + ||w_i||^2) on the label scale."""
        return float(np.sqrt((self.W**2).sum(axis=0) + self.s**2).max())

    @property
    def p_min(self) -> float:
        return float(self.p.min())

    @property
    def lambda_min(self) -> float:
        """Smallest nonzero eigenvalue of sum_j p_j w_j w_j^T."""
        M = (self.W * self.p) @ self.W.T
        evals = np.linalg.eigvalsh(M)
        cutoff = LAMBDA_MIN_CUTOFF * self.rho**2
        nonzero = evals[evals > cutoff]
        return float(nonzero.min()) if nonzero.size else 0.0

    @property
    def noise_floor(self) -> float:
        """sum_i p_i s_i^2, the irreducible prediction error."""
        return float(np.dot(self.p, self.s**2))


def validate_meta(params: MetaParams) -> None:
    """Check every MetaParams invariant; raise MetaParamsError listing all
    violations (simplex, positive noise, rho <= 1, positive separation)."""
    codes: list[str] = []
    details: list[str] = []
    W, s, p = params.W, params.s, params.p
    if W.ndim != 2 or s.shape != (W.shape[1],) or p.shape != (W.shape[1],):
        raise MetaParamsError(["shape-mismatch"], ["W, s, p shapes are inconsistent"])

    if abs(p.sum() - 1.0) > SIMPLEX_TOL or np.any(p <= 0):
        codes.append("invalid-simplex")
        details.append(f"p must be strictly positive and sum to 1 (sum={p.sum()!r})")
    if np.any(s <= 0):
        codes.append("non-positive-noise")
        details.append(f"all noise scales must be positive (min={s.min()!r})")
    rho = float(np.sqrt((W**2).sum(axis=0) + s**2).max())
    if rho > 1.0 + RHO_TOL:
        codes.append("scale-exceeds-one")
        details.append(f"rho={rho!r} exceeds the unit normalization")
    k = W.shape[1]
    if k >= 2:
        diffs = W[:, :, None] - W[:, None, :]
        dist2 = (diffs**2).sum(axis=0)
        iu = np.triu_indices(k, 1)
        if dist2[iu].min() <= 0.0:
            codes.append("zero-separation")
            details.append("two regression vectors coincide (delta = 0)")
    if codes:
        raise MetaParamsError(codes, details)


@dataclass(frozen=True)
class TaskBatch:
    """One task's labelled examples; rows of X pair with entries of y.

    ``true_component`` is the hidden mixture label, carried only for
    evaluation of synthetic data.
    """

    X: np.ndarray  # (t, d)
    y: np.ndarray  # (t,)
    true_component: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "X", _freeze(np.atleast_2d(self.X)))
        object.__setattr__(self, "y", _freeze(np.atleast_1d(self.y)))
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y must have matching row counts")
        if self.t < 1:
            raise ValueError("a task needs at least one example")

    @property
    def t(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class TaskPool:
    """The three datasets consumed by the pipeline stages.

    light1 feeds subspace estimation (needs t >= 2 per task), heavy feeds
    clustering, light2 feeds classification/refinement.
    """

    light1: tuple[TaskBatch, ...]
    heavy: tuple[TaskBatch, ...]
    light2: tuple[TaskBatch, ...]

    def __post_init__(self):
        object.__setattr__(self, "light1", tuple(self.light1))
        object.__setattr__(self, "heavy", tuple(self.heavy))
        object.__setattr__(self, "light2", tuple(self.light2))
        if any(task.t < 2 for task in self.light1):
            raise ValueError("light1 tasks need at least 2 examples each")

    @property
    def n_l1(self) -> int:
        return len(self.light1)

    @property
    def n_h(self) -> int:
        return len(self.heavy)

    @property
    def n_l2(self) -> int:
        return len(self.light2)


@dataclass(frozen=True)
class Subspace:
    """Orthonormal d x k basis of the estimated regression-vector span."""

    U: np.ndarray  # (d, k)

    def __post_init__(self):
        object.__setattr__(self, "U", _freeze(np.atleast_2d(self.U)))
        gram = self.U.T @ self.U
        if np.abs(gram - np.eye(self.k)).max() > ORTHO_TOL:
            raise ValueError("columns of U are not orthonormal")

    @property
    def d(self) -> int:
        return self.U.shape[0]

    @property
    def k(self) -> int:
        return self.U.shape[1]

    def project(self, v: np.ndarray) -> np.ndarray:
        """Orthogonal projection U U^T v (v may be a vector or matrix of columns)."""
        return self.U @ (self.U.T @ v)


@dataclass(frozen=True)
class ClusterModel:
    """Clustering-stage output: memberships and rough per-cluster estimates.

    r2_tilde[i] estimates s_i^2 + ||w_tilde_i - w_i||^2, the residual scale
    the classification objective divides by.
    """

    assignments: dict[int, int]  # heavy task index -> cluster index
    w_tilde: np.ndarray  # (d, k)
    r2_tilde: np.ndarray  # (k,)
    p_tilde: np.ndarray  # (k,)

    def __post_init__(self):
        object.__setattr__(self, "w_tilde", _freeze(np.atleast_2d(self.w_tilde)))
        object.__setattr__(self, "r2_tilde", _freeze(np.atleast_1d(self.r2_tilde)))
        object.__setattr__(self, "p_tilde", _freeze(np.atleast_1d(self.p_tilde)))
        k = self.w_tilde.shape[1]
        counts = np.bincount(list(self.assignments.values()), minlength=k)
        if np.any(counts == 0):
            raise ValueError("every cluster must be nonempty")
        if np.any(self.r2_tilde <= 0):
            raise ValueError("r2_tilde entries must be positive")
        if abs(self.p_tilde.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError("p_tilde must sum to 1")

    @property
    def k(self) -> int:
        return self.w_tilde.shape[1]


@dataclass(frozen=True)
class FittedModel:
    """Refined meta-parameter estimate (W_hat, s2_hat, p_hat).

    ``s2_valid`` flags components whose noise estimate is degenerate
    (underdetermined least squares or an exact fit); ``p_valid`` is False
    when no light tasks were available to estimate mixing weights.
    """

    W_hat: np.ndarray  # (d, k)
    s2_hat: np.ndarray  # (k,)
    p_hat: np.ndarray  # (k,)
    s2_valid: np.ndarray = field(default=None)  # (k,) bool
    p_valid: bool = True

    def __post_init__(self):
        object.__setattr__(self, "W_hat", _freeze(np.atleast_2d(self.W_hat)))
        object.__setattr__(self, "s2_hat", _freeze(np.atleast_1d(self.s2_hat)))
        object.__setattr__(self, "p_hat", _freeze(np.atleast_1d(self.p_hat)))
        valid = self.s2_valid
        if valid is None:
            valid = self.s2_hat > 0
        valid = np.asarray(valid, dtype=bool).copy()
        valid.setflags(write=False)
        object.__setattr__(self, "s2_valid", valid)
        if self.p_valid and abs(self.p_hat.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError("p_hat must sum to 1")
        if np.any(self.s2_hat[self.s2_valid] <= 0):
            raise ValueError("valid s2_hat entries must be positive")

    @property
    def d(self) -> int:
        return self.W_hat.shape[0]

    @property
    def k(self) -> int:
        return self.W_hat.shape[1]

    @classmethod
    def from_truth(cls, meta: MetaParams) -> "FittedModel":
        """Wrap ground-truth parameters as a fitted model (oracle predictor)."""
        return cls(W_hat=meta.W, s2_hat=meta.s**2, p_hat=meta.p)
