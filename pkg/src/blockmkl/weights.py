"""Recover kernel mixture weights from a dual solution.

Pure block-norm MKL (``mu == 0``) gives weights proportional to
``||K_m||^((2-p)/(p-1))``; the elastic net (``mu > 0``) couples them through
a nonlinear system solved through its scalar coupling term. Here
``||K_m|| = sqrt(z' K_m z)`` is the feature-space norm of the dual expansion
``z = alpha * y`` in kernel ``m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import quad_forms
from .objective import LabeledProblem, block_norm, conjugate_exponent



class WeightRecoveryError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class KernelWeights:
    """Mixture coefficients.

    ``theta * scale`` are the weights that reproduce the optimal classifier
    (``scale`` is 1 for raw weights); ``theta`` alone is what gets reported.
    """

    theta: np.ndarray
    normalization: str = "raw"
    scale: float = 1.0

    def __post_init__(self):
        th = np.array(self.theta, dtype=np.float64)
        if th.ndim != 1 or np.any(th < 0) or not np.all(np.isfinite(th)):
            raise ValueError("kernel weights must be a finite nonnegative vector")
        if self.normalization not in ("sum_to_one", "raw"):
            raise ValueError("normalization must be 'sum_to_one' or 'raw'")
        if self.normalization == "sum_to_one" and abs(th.sum() - 1.0) > 1e-10:
            raise ValueError("sum_to_one weights must sum to 1")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    @property
    def effective(self) -> np.ndarray:
        return self.theta * self.scale

    def normalized(self) -> "KernelWeights":
        eff = self.effective
        total = eff.sum()
        if self.normalization == "sum_to_one" or total == 0:
            return self
        return KernelWeights(eff / total, "sum_to_one", float(total))


def kernel_norms(v, kernels) -> np.ndarray:
    """``sqrt(max(v' K_m v, 0))`` for every kernel."""
    stack = getattr(kernels, "matrices", kernels)
    v = np.asarray(v, dtype=np.float64)
    _, q = quad_forms(np.asarray(stack, dtype=np.float64), v)
    return np.sqrt(np.maximum(q, 0.0))


def recover_blocknorm(norms, p: float) -> KernelWeights:
    """Weights ``theta_m ~ norms_m^((2-p)/(p-1))``, normalized to sum to one.

    ``scale`` carries the KKT constant so that ``effective`` equals
    ``(norms_m / ||norms||_{p*})^(p*-2)``.
    """
    s = np.asarray(norms, dtype=np.float64)
    if not (1 < p < math.inf):
        raise ValueError("p must lie in (1, inf)")
    if np.any(s < 0):
        raise ValueError("norms must be nonnegative")
    live = s > 0
    if not live.any():
        raise WeightRecoveryError("all kernel norms are zero; weights undefined")
    e = (2.0 - p) / (p - 1.0)
    if e == 0.0:
        raw = np.ones_like(s)
    else:
        # kernels without dual mass get zero weight for either sign of e
        ps = conjugate_exponent(p)
        S = block_norm(s, ps)
        raw = np.zeros_like(s)
        raw[live] = np.exp(e * (np.log(s[live]) - math.log(S)))
    total = float(raw.sum())
    if not (np.isfinite(total) and total > 0):
        # e.g. underflow for huge |e|: fall back to the log-domain argmax shape
        logs = np.full(s.shape, -np.inf)
        logs[live] = e * np.log(s[live])
        raw = np.exp(logs - logs.max())
        return KernelWeights(raw / raw.sum(), "sum_to_one", 1.0)
    return KernelWeights(raw / total, "sum_to_one", total)


def elasticnet_residuals(theta, norms, mu, eps) -> np.ndarray:
    """Left minus right side of the elastic-net optimality system::

        mu th_m n_m^(1-eps) + th_m^eps (sum_k th_k^(1+eps) n_k^(1+eps))^(1-eps)
            = n_m^(1-eps)
    """
    th = np.asarray(theta, dtype=np.float64)
    s = np.asarray(norms, dtype=np.float64)
    b = s ** (1.0 - eps)
    coupling = float(np.sum((th * s) ** (1.0 + eps))) ** (1.0 - eps)
    return mu * th * b + th ** eps * coupling - b


LOG_TINY = math.log(np.finfo(float).tiny)


def _scalar_root(b, coupling, mu, eps):
    """Root of ``mu b t + coupling t^eps = b`` over ``t > 0``.

    In ``u = log t`` the left side is convex and increasing, so Newton
    started right of the root (``t = 1/mu``) descends onto it monotonically.
    Returns ``(t, underflow)``; ``underflow`` flags roots below the smallest
    normal double, which are returned as 0.
    """
    if b == 0.0:
        return 0.0, False
    if coupling == 0.0:
        return 1.0 / mu, False
    u = -math.log(mu)
    for _ in range(2000):
        eu = math.exp(u)
        ce = coupling * math.exp(eps * u)
        h = mu * b * eu + ce - b
        step = h / (mu * b * eu + eps * ce)
        u -= step
        if u < LOG_TINY:
            return 0.0, True
        if abs(step) <= 1e-15 * max(1.0, abs(u)):
            break
    return math.exp(u), False


def _weights_given_coupling(A, b, mu, eps):
    c = A ** (1.0 - eps)
    roots = [_scalar_root(bm, c, mu, eps) for bm in b]
    return np.array([r for r, _ in roots]), np.array([u for _, u in roots])


def recover_elasticnet(norms, mu: float, eps: float = 0.01, tol: float = 1e-10,
                       max_iter: int = 200) -> KernelWeights:
    """Solve the elastic-net system for raw weights.

    The equations couple only through ``A = sum_k (theta_k n_k)^(1+eps)``.
    For a fixed ``A`` each equation has one root ``theta_m(A)``, decreasing
    in ``A``, so ``A - sum_k (theta_k(A) n_k)^(1+eps)`` is strictly
    increasing on ``[0, sum_k (n_k/mu)^(1+eps)]`` and its unique zero is
    found by bisection. ``max_iter`` caps the bisection steps.
    """
    s = np.asarray(norms, dtype=np.float64)
    if not mu > 0:
        raise ValueError("mu must be > 0")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if np.any(s < 0):
        raise ValueError("norms must be nonnegative")
    if not np.any(s > 0):
        raise WeightRecoveryError("all kernel norms are zero; weights undefined")
    b = s ** (1.0 - eps)
    scale = np.maximum(1.0, b)

    def excess(A):
        th, under = _weights_given_coupling(A, b, mu, eps)
        return A - float(np.sum((th * s) ** (1.0 + eps))), th, under

    lo, hi = 0.0, float(np.sum((s / mu) ** (1.0 + eps)))
    th, under = _weights_given_coupling(hi, b, mu, eps)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        g, th_mid, under_mid = excess(mid)
        if g > 0:
            hi = mid
        else:
            lo = mid
        th, under = th_mid, under_mid
        res = elasticnet_residuals(th, s, mu, eps)
        # equations whose root lies below double precision count as solved
        if np.all((np.abs(res) <= tol * scale) | under):
            return KernelWeights(th, "raw", 1.0)
    res = elasticnet_residuals(th, s, mu, eps)
    if np.all((np.abs(res) <= tol * scale) | under):
        return KernelWeights(th, "raw", 1.0)
    raise WeightRecoveryError(
        f"elastic-net weights did not reach tolerance {tol:g} "
        f"(max residual {np.max(np.abs(res)):.3g})", residuals=res)


def expansion_vector(point, prob: LabeledProblem) -> np.ndarray:
    """Dual expansion ``z = alpha * y`` of the classifier in every kernel."""
    return np.asarray(point.alpha, dtype=np.float64) * prob.labels


def theta_from_solution(sol, prob: LabeledProblem, tol: float = 1e-10,
                        max_iter: int = 200) -> KernelWeights:
    """Dispatch on the config: block-norm weights when ``mu == 0``, the
    elastic-net system otherwise."""
    cfg = prob.config
    if cfg.mu == 0 and prob.M == 1:
        return KernelWeights(np.ones(1), "sum_to_one", 1.0)
    norms = kernel_norms(expansion_vector(sol.point, prob), prob.kernels)
    if cfg.mu == 0:
        return recover_blocknorm(norms, cfg.p)
    return recover_elasticnet(norms, cfg.mu, cfg.en_eps, tol=tol, max_iter=max_iter)
