"""Pure-numpy fallbacks for the compiled kernels.

Selected by ``mixlinreg.kernels`` when the Cython extension is not built.
Each function matches the contract of its ``_ckernels`` counterpart; the
two backends agree to solver tolerance (eigenpairs) or exactly (labels).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def eigh_full(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full symmetric eigendecomposition, eigenvalues ascending."""
    return np.linalg.eigh(A)


def pairwise_median_inner(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """H[i, j] = median over batches of <g1[i]-g1[j], g2[i]-g2[j]>.

    g1, g2: (n, L, k) projected batch estimates. Returns a symmetric
    (n, n) matrix with zero diagonal.
    """
    n = g1.shape[0]
    H = np.zeros((n, n))
    for i in range(n - 1):
        d1 = g1[i] - g1[i + 1 :]  # (n-i-1, L, k)
        d2 = g2[i] - g2[i + 1 :]
        vals = np.einsum("mlk,mlk->ml", d1, d2)
        row = np.median(vals, axis=1)
        H[i, i + 1 :] = row
        H[i + 1 :, i] = row
    return H


def union_find_merge(
    ei: np.ndarray, ej: np.ndarray, n: int, k: int
) -> np.ndarray:
    """Merge edges in the given order until k clusters remain.

    ei, ej: endpoint arrays of edges already sorted by (distance, i, j).
    Returns a cluster id per point, ids assigned 0..k-1 in order of each
    cluster's smallest member.
    """
    parent = np.arange(n)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    remaining = n
    for a, b in zip(ei, ej):
        if remaining == k:
            break
        ra, rb = find(a), find(b)
        if ra != rb:
            # keep the smaller index as the root so roots stay canonical
            if rb < ra:
                ra, rb = rb, ra
            parent[rb] = ra
            remaining -= 1
    roots = np.array([find(a) for a in range(n)])
    _, labels = np.unique(roots, return_inverse=True)
    return labels
