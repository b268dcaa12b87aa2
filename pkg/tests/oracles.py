"""Reference implementations the tests compare against.

Nothing here imports the package's numerical code: each oracle recomputes its
quantity from scratch (explicit loops, an off-the-shelf conic solver,
high-precision arithmetic) so agreement is evidence, not tautology.
"""
from __future__ import annotations

import itertools
import math
import warnings
from collections import Counter

import numpy as np


# ---------------------------------------------------------------- instances

def feature_instance(rng, n, M, extra_dims=(0, 3)):
    """Random labeled instance with explicit unit-norm features per kernel.

    Returns ``(features, grams, y)`` where ``grams[m] = F_m F_m'`` has unit
    diagonal and full rank (feature dimension >= n).
    """
    feats = []
    for _ in range(M):
        F = rng.normal(size=(n, n + int(rng.integers(*extra_dims))))
        feats.append(F / np.linalg.norm(F, axis=1, keepdims=True))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    grams = [F @ F.T for F in feats]
    grams = [0.5 * (G + G.T) for G in grams]
    for G in grams:
        np.fill_diagonal(G, 1.0)
    return feats, grams, y


def psd_factor(K):
    """``F`` with ``F F' = K`` from the eigendecomposition (negatives clipped)."""
    w, U = np.linalg.eigh(np.asarray(K, dtype=float))
    return U * np.sqrt(np.clip(w, 0.0, None))


# ---------------------------------------------------------------- dual pieces

def conj(p):
    return p / (p - 1.0)


def dual_value(alpha, gamma, grams, y, p, mu, c, loss="hinge", floor=1e-12):
    """Dual objective evaluated with plain loops over kernels and samples."""
    n = len(y)
    v = [alpha[i] * y[i] - gamma[i] for i in range(n)]
    ps = conj(p)
    s = []
    for K in grams:
        q = sum(v[i] * K[i][j] * v[j] for i in range(n) for j in range(n))
        s.append(math.sqrt(max(q, floor)))
    S = sum(x ** ps for x in s) ** (1.0 / ps)
    if loss == "hinge":
        if any(a < 0 or a > c for a in alpha):
            return -math.inf
        val = float(sum(alpha))
    else:
        val = float(sum(a - a * a / (4.0 * c) for a in alpha))
    val -= 0.5 * S * S
    if mu > 0:
        Ksum = np.sum(grams, axis=0)
        val -= sum(gamma[i] * Ksum[i][j] * gamma[j] for i in range(n) for j in range(n)) / (2 * mu)
    return val


def cvx_dual_optimum(feats, y, p, mu, c, loss="hinge"):
    """Maximize the (unsmoothed) dual with an interior-point conic solver.

    Block norms are written through explicit features, so the problem is a
    second-order/power-cone program independent of the package code.
    """
    import cvxpy as cp

    n = len(y)
    a = cp.Variable(n)
    g = cp.Variable(n) if mu > 0 else None
    v = cp.multiply(a, y) - (g if g is not None else 0)
    norms = cp.hstack([cp.norm(F.T @ v) for F in feats])
    obj = -0.5 * cp.square(cp.pnorm(norms, conj(p)))
    cons = []
    if loss == "hinge":
        obj = obj + cp.sum(a)
        cons = [a >= 0, a <= c]
    else:
        obj = obj + cp.sum(a) - cp.sum_squares(a) / (4.0 * c)
    if g is not None:
        obj = obj - cp.sum_squares(cp.hstack([F.T @ g for F in feats])) / (2.0 * mu)
    prob = cp.Problem(cp.Maximize(obj), cons)
    with warnings.catch_warnings():
        # the tight tolerances trigger "may be inaccurate" notes; callers
        # compare values at 1e-6, far above what the solver delivers
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver="CLARABEL", tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return prob.value, a.value, (g.value if g is not None else np.zeros(n))


def grid_maximize_2(fun, lo, hi, levels=6, points=201):
    """Zoom-in grid search for the maximum of ``fun(a1, a2)`` over a box."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    best = (-math.inf, None)
    for _ in range(levels):
        g1 = np.linspace(lo[0], hi[0], points)
        g2 = np.linspace(lo[1], hi[1], points)
        for a1 in g1:
            for a2 in g2:
                val = fun(a1, a2)
                if val > best[0]:
                    best = (val, (a1, a2))
        width = (hi - lo) / points * 4
        centre = np.array(best[1])
        lo = np.maximum(lo, centre - width)
        hi = np.minimum(hi, centre + width)
    return best


# ---------------------------------------------------------------- kernels

def spectrum_brute(a: str, b: str, k: int) -> int:
    """Shared k-gram count by enumerating every pair of substring positions."""
    total = 0
    for i in range(len(a) - k + 1):
        for j in range(len(b) - k + 1):
            if a[i:i + k] == b[j:j + k]:
                total += 1
    return total


def ngram_vector_dot(a: str, b: str, k: int) -> int:
    ca = Counter(a[i:i + k] for i in range(len(a) - k + 1))
    cb = Counter(b[i:i + k] for i in range(len(b) - k + 1))
    return sum(ca[g] * cb[g] for g in ca)


# ---------------------------------------------------------------- metrics

def auc_pairs(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l > 0]
    neg = [s for s, l in zip(scores, labels) if l < 0]
    credit = 0.0
    for sp, sn in itertools.product(pos, neg):
        credit += 1.0 if sp > sn else 0.5 if sp == sn else 0.0
    return credit / (len(pos) * len(neg))


# ---------------------------------------------------------------- bounds

def rademacher_mp(M, n, p, q, c1, c2, sharpen=True, dps=50):
    import mpmath as mp

    with mp.workdps(dps):
        M, n = mp.mpf(M), mp.mpf(n)
        factor = M / (c1 * M ** (mp.mpf(1) / p) + c2 * M ** (mp.mpf(1) / q))
        if sharpen and p >= 2 and q >= 2:
            return factor * mp.sqrt(1 / n)
        return factor * (mp.sqrt(2 * mp.log(M) / n) + mp.sqrt(1 / n))


def generalization_mp(emp, L, R, n, delta, dps=50):
    import mpmath as mp

    with mp.workdps(dps):
        return mp.mpf(emp) + 2 * mp.mpf(L) * mp.mpf(R) + mp.sqrt(8 * mp.log(2 / mp.mpf(delta)) / n)


# ---------------------------------------------------------------- elastic net

def elasticnet_root(norms, mu, eps):
    """Solve the elastic-net weight equations with scipy's hybrid Powell method.

    Works in ``u = log theta`` (dividing each equation by its right side) so
    positivity is automatic, restarting from several points; returns the root
    with the smallest residual of the original equations. Zero norms get 0.
    """
    from scipy.optimize import root

    s = np.asarray(norms, dtype=float)
    live = s > 0
    b = s[live] ** (1 - eps)

    def F_raw(th):
        coupling = np.sum((th * s[live]) ** (1 + eps)) ** (1 - eps)
        return mu * th * b + th ** eps * coupling - b

    def F_log(u):
        return F_raw(np.exp(u)) / b

    best = None
    for start in (1.0 / (mu + s.size), 1.0 / mu, 1e-3, 1e-6):
        with np.errstate(over="ignore", invalid="ignore"):
            r = root(F_log, np.full(b.size, math.log(start)), method="hybr", tol=1e-15)
            th_live = np.exp(r.x)
            res = float(np.max(np.abs(F_raw(th_live))))
        if not np.isfinite(res):
            continue
        if best is None or res < best[1]:
            th = np.zeros(s.size)
            th[live] = th_live
            best = (th, res)
    return best
