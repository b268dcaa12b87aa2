# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a twin with the same signature in ``_fallback``;
``_backend`` picks one at import time.
"""
import numpy as np


def quad_forms(const double[:, :, ::1] stack, const double[::1] v):
    """Return ``(K_m v for every m, v' K_m v for every m)``."""
    cdef Py_ssize_t M = stack.shape[0]
    cdef Py_ssize_t n = stack.shape[1]
    cdef Py_ssize_t m, i, j, n4 = n - n % 4
    cdef double a0, a1, a2, a3, tot

    if v.shape[0] != n or stack.shape[2] != n:
        raise ValueError("dimension mismatch between kernels and vector")

    Kv = np.empty((M, n), dtype=np.float64)
    q = np.empty(M, dtype=np.float64)
    cdef double[:, ::1] kv = Kv
    cdef double[::1] qv = q

    with nogil:
        for m in range(M):
            tot = 0.0
            for i in range(n):
                a0 = 0.0
                a1 = 0.0
                a2 = 0.0
                a3 = 0.0
                for j in range(0, n4, 4):
                    a0 = a0 + stack[m, i, j] * v[j]
                    a1 = a1 + stack[m, i, j + 1] * v[j + 1]
                    a2 = a2 + stack[m, i, j + 2] * v[j + 2]
                    a3 = a3 + stack[m, i, j + 3] * v[j + 3]
                for j in range(n4, n):
                    a0 = a0 + stack[m, i, j] * v[j]
                a0 = (a0 + a1) + (a2 + a3)
                kv[m, i] = a0
                tot = tot + a0 * v[i]
            qv[m] = tot
    return Kv, q


def sq_dists(const double[:, ::1] X, const double[:, ::1] Y, bint symmetric):
    """Pairwise squared Euclidean distances, summed coordinate by coordinate."""
    cdef Py_ssize_t na = X.shape[0], nb = Y.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, k, jstart
    cdef double acc, diff

    if Y.shape[1] != d:
        raise ValueError("feature dimensions differ")
    out = np.zeros((na, nb), dtype=np.float64)
    cdef double[:, ::1] o = out

    with nogil:
        for i in range(na):
            jstart = i if symmetric else 0
            for j in range(jstart, nb):
                acc = 0.0
                for k in range(d):
                    diff = X[i, k] - Y[j, k]
                    acc = acc + diff * diff
                o[i, j] = acc
                if symmetric:
                    o[j, i] = acc
    return out


def sparse_count_gram(const long long[::1] indptr_a, const long long[::1] ids_a,
                      const double[::1] cnt_a, const long long[::1] indptr_b,
                      const long long[::1] ids_b, const double[::1] cnt_b,
                      bint symmetric):
    """Dot products between rows of two sorted sparse count tables.

    Row ``r`` of a table owns ``ids[indptr[r]:indptr[r+1]]`` (strictly
    increasing) with matching ``cnt`` entries.
    """
    cdef Py_ssize_t na = indptr_a.shape[0] - 1, nb = indptr_b.shape[0] - 1
    cdef Py_ssize_t i, j, ia, ib, ea, eb, jstart
    cdef double acc

    out = np.zeros((na, nb), dtype=np.float64)
    cdef double[:, ::1] o = out

    with nogil:
        for i in range(na):
            jstart = i if symmetric else 0
            for j in range(jstart, nb):
                ia = indptr_a[i]
                ea = indptr_a[i + 1]
                ib = indptr_b[j]
                eb = indptr_b[j + 1]
                acc = 0.0
                while ia < ea and ib < eb:
                    if ids_a[ia] == ids_b[ib]:
                        acc = acc + cnt_a[ia] * cnt_b[ib]
                        ia = ia + 1
                        ib = ib + 1
                    elif ids_a[ia] < ids_b[ib]:
                        ia = ia + 1
                    else:
                        ib = ib + 1
                o[i, j] = acc
                if symmetric:
                    o[j, i] = acc
    return out
