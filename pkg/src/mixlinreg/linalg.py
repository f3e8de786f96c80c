"""Dense numerical kernels: top-k symmetric eigenpairs and least squares."""

from __future__ import annotations

import numpy as np

from . import kernels
from .model import Subspace

__all__ = ["SymMatrix", "top_k_eig", "least_squares"]

SYMMETRY_TOL = 1e-12
CHOLESKY_PIVOT_RATIO = 1e-10


class SymMatrix:
    """Dense symmetric matrix; symmetry is checked and enforced on construction."""

    __slots__ = ("data",)

    def __init__(self, A: np.ndarray, check: bool = True):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("SymMatrix needs a square 2-D array")
        if check:
            asym = np.abs(A - A.T).max() if A.size else 0.0
            scale = max(np.abs(A).max(), 1.0)
            if asym > SYMMETRY_TOL * scale:
                raise ValueError(f"matrix is not symmetric (max |A-A^T| = {asym!r})")
        data = 0.5 * (A + A.T)
        data.setflags(write=False)
        self.data = data

    @property
    def d(self) -> int:
        return self.data.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)


def top_k_eig(A: SymMatrix | np.ndarray, k: int) -> tuple[np.ndarray, Subspace]:
    """Top-k eigenpairs of a symmetric matrix, ordered by |eigenvalue| descending.

    These are the top singular pairs of A; signs of the eigenvectors are
    normalized so the largest-magnitude entry of each is positive.
    """
    if not isinstance(A, SymMatrix):
        A = SymMatrix(A)
    d = A.d
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    w, V = kernels.eigh_full(A.data)
    order = np.argsort(-np.abs(w), kind="stable")[:k]
    vals = w[order]
    U = V[:, order].copy()
    # deterministic sign: largest-|entry| coordinate made positive
    idx = np.abs(U).argmax(axis=0)
    signs = np.sign(U[idx, np.arange(k)])
    signs[signs == 0] = 1.0
    U *= signs
    return vals, Subspace(U=U)


def least_squares(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Minimizer of ||X b - y||^2; minimum-norm solution when X^T X is singular.

    Solves the normal equations by Cholesky in the well-conditioned case and
    falls back to an SVD pseudoinverse solve otherwise.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (m, d) with y of length m")
    m, d = X.shape
    if m >= d:
        G = X.T @ X
        try:
            L = np.linalg.cholesky(G)
            diag = np.diag(L)
            if (diag.min() / diag.max()) ** 2 >= CHOLESKY_PIVOT_RATIO:
                b = X.T @ y
                z = np.linalg.solve(L, b)
                return np.linalg.solve(L.T, z)
        except np.linalg.LinAlgError:
            pass
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return beta
