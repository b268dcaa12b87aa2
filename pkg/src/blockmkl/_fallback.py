"""Pure-Python/numpy twins of the routines in ``_core.pyx``."""
import numpy as np


def quad_forms(stack, v):
    stack = np.asarray(stack, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[1] != v.shape[0] or stack.shape[2] != v.shape[0]:
        raise ValueError("dimension mismatch between kernels and vector")
    Kv = stack @ v
    return Kv, Kv @ v


def sq_dists(X, Y, symmetric):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[1] != Y.shape[1]:
        raise ValueError("feature dimensions differ")
    diff = X[:, None, :] - Y[None, :, :]
    out = np.einsum("ijk,ijk->ij", diff, diff)
    if symmetric:
        out = np.triu(out)
        out = out + np.triu(out, 1).T
    return out


def sparse_count_gram(indptr_a, ids_a, cnt_a, indptr_b, ids_b, cnt_b, symmetric):
    na = len(indptr_a) - 1
    nb = len(indptr_b) - 1
    rows_a = [(ids_a[indptr_a[i]:indptr_a[i + 1]], cnt_a[indptr_a[i]:indptr_a[i + 1]])
              for i in range(na)]
    rows_b = [(ids_b[indptr_b[j]:indptr_b[j + 1]], cnt_b[indptr_b[j]:indptr_b[j + 1]])
              for j in range(nb)]
    out = np.zeros((na, nb))
    for i, (ia, ca) in enumerate(rows_a):
        for j in range(i if symmetric else 0, nb):
            ib, cb = rows_b[j]
            _, pa, pb = np.intersect1d(ia, ib, assume_unique=True, return_indices=True)
            acc = 0.0
            for x, y in zip(ca[pa], cb[pb]):
                acc += x * y
            out[i, j] = acc
            if symmetric:
                out[j, i] = acc
    return out
