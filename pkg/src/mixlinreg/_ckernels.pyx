# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: cyclic-Jacobi eigendecomposition, median-boosted
pairwise distances, and the single-linkage merge loop.

The pure-numpy fallbacks live in ``_pykernels``; ``mixlinreg.kernels``
selects between the two at import time.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND = "c"


def eigh_full(A):
    """Full symmetric eigendecomposition by cyclic Jacobi sweeps.

    Rotations are applied until off(A) <= 1e-12 * ||A||_F (or 60 sweeps).
    Returns (eigenvalues ascending, eigenvectors as columns), matching
    numpy.linalg.eigh's interface.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] M = np.array(A, dtype=np.float64, order="C")
    cdef Py_ssize_t d = M.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] V = np.eye(d)
    cdef double[:, ::1] m = M
    cdef double[:, ::1] v = V
    cdef double fro = np.linalg.norm(M, "fro")
    cdef double thresh = 1e-12 * fro
    cdef double off, app, aqq, apq, theta, t, c, s, tau, g, h
    cdef Py_ssize_t p, q, i, sweep

    if d == 1:
        return np.array([M[0, 0]]), V

    for sweep in range(60):
        off = 0.0
        for p in range(d - 1):
            for q in range(p + 1, d):
                off += m[p, q] * m[p, q]
        off = sqrt(2.0 * off)
        if off <= thresh:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = m[p, q]
                if fabs(apq) == 0.0:
                    continue
                app = m[p, p]
                aqq = m[q, q]
                theta = 0.5 * (aqq - app) / apq
                # smaller-magnitude root keeps the rotation angle <= pi/4
                if theta >= 0.0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                m[p, p] = app - t * apq
                m[q, q] = aqq + t * apq
                m[p, q] = 0.0
                m[q, p] = 0.0
                for i in range(d):
                    if i != p and i != q:
                        g = m[i, p]
                        h = m[i, q]
                        m[i, p] = g - s * (h + tau * g)
                        m[i, q] = h + s * (g - tau * h)
                        m[p, i] = m[i, p]
                        m[q, i] = m[i, q]
                for i in range(d):
                    g = v[i, p]
                    h = v[i, q]
                    v[i, p] = g - s * (h + tau * g)
                    v[i, q] = h + s * (g - tau * h)

    w = np.diagonal(M).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def pairwise_median_inner(double[:, :, ::1] g1, double[:, :, ::1] g2):
    """H[i, j] = median over batches of <g1[i]-g1[j], g2[i]-g2[j]>."""
    cdef Py_ssize_t n = g1.shape[0]
    cdef Py_ssize_t L = g1.shape[1]
    cdef Py_ssize_t k = g1.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] H = np.zeros((n, n))
    cdef double[:, ::1] h = H
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf_arr = np.empty(L)
    cdef double[::1] buf = buf_arr
    cdef Py_ssize_t i, j, l, a, b
    cdef double acc, key, med

    for i in range(n - 1):
        for j in range(i + 1, n):
            for l in range(L):
                acc = 0.0
                for a in range(k):
                    acc += (g1[i, l, a] - g1[j, l, a]) * (g2[i, l, a] - g2[j, l, a])
                buf[l] = acc
            # insertion sort; L is small
            for a in range(1, L):
                key = buf[a]
                b = a - 1
                while b >= 0 and buf[b] > key:
                    buf[b + 1] = buf[b]
                    b -= 1
                buf[b + 1] = key
            if L % 2 == 1:
                med = buf[L // 2]
            else:
                med = 0.5 * (buf[L // 2 - 1] + buf[L // 2])
            h[i, j] = med
            h[j, i] = med
    return H


def union_find_merge(ei, ej, Py_ssize_t n, Py_ssize_t k):
    """Merge edges in the given order until k clusters remain."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ei_arr = np.ascontiguousarray(ei, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ej_arr = np.ascontiguousarray(ej, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] parent_arr = np.arange(n, dtype=np.int64)
    cdef long long[::1] e1 = ei_arr
    cdef long long[::1] e2 = ej_arr
    cdef long long[::1] parent = parent_arr
    cdef Py_ssize_t m = ei_arr.shape[0]
    cdef Py_ssize_t remaining = n
    cdef Py_ssize_t idx
    cdef long long a, b, ra, rb, tmp

    for idx in range(m):
        if remaining == k:
            break
        a = e1[idx]
        b = e2[idx]
        ra = a
        while parent[ra] != ra:
            parent[ra] = parent[parent[ra]]
            ra = parent[ra]
        rb = b
        while parent[rb] != rb:
            parent[rb] = parent[parent[rb]]
            rb = parent[rb]
        if ra != rb:
            if rb < ra:
                tmp = ra
                ra = rb
                rb = tmp
            parent[rb] = ra
            remaining -= 1

    roots = np.empty(n, dtype=np.int64)
    cdef long long[::1] roots_v = roots
    for idx in range(n):
        a = idx
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        roots_v[idx] = a
    _, labels = np.unique(roots, return_inverse=True)
    return labels
