"""Dual and primal objectives of block-norm / elastic-net MKL.

The dual is maximized over ``alpha`` (label-substituted, boxed to ``[0, C]``
for the hinge loss) and a free split variable ``gamma`` that carries the
elastic-net smoothing. With ``v = alpha * y - gamma`` and per-kernel norms
``s_m = sqrt(v' K_m v)`` it reads::

    D(alpha, gamma) = L(alpha) - 1/2 ||s||_{p*}^2 - 1/(2 mu) gamma' K gamma

where ``L`` is the dual-loss term and ``K`` the sum of the base kernels.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import quad_forms
from .kernels import KernelSet

P_MIN = 64.0 / 63.0
P_MAX = 64.0
LOSSES = ("hinge", "squared")


@dataclass(frozen=True)
class MklConfig:
    p: float = 2.0
    mu: float = 0.0
    c: float = 1.0
    loss: str = "hinge"
    smooth_eps: float = 1e-12
    en_eps: float = 0.01

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p):
            raise ValueError("p must be a number")
        if p < P_MIN or p > P_MAX:
            clamped = min(max(p, P_MIN), P_MAX)
            warnings.warn(f"p={p:g} outside [64/63, 64]; using p={clamped:.17g}",
                          RuntimeWarning, stacklevel=3)
            p = clamped
        object.__setattr__(self, "p", p)
        if not self.mu >= 0:
            raise ValueError("mu must be >= 0")
        if not self.c > 0:
            raise ValueError("c must be > 0")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if not self.smooth_eps > 0:
            raise ValueError("smooth_eps must be > 0")
        if not 0 < self.en_eps < 1:
            raise ValueError("en_eps must lie in (0, 1)")

    @property
    def p_star(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def boxed(self) -> bool:
        return self.loss == "hinge"


@dataclass(frozen=True)
class DualPoint:
    alpha: np.ndarray
    gamma: np.ndarray

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n))


@dataclass(frozen=True)
class LabeledProblem:
    kernels: KernelSet
    labels: np.ndarray
    config: MklConfig

    def __post_init__(self):
        y = np.asarray(self.labels, dtype=np.float64)
        if y.ndim != 1 or y.shape[0] != self.kernels.n:
            raise ValueError(f"{y.shape[0] if y.ndim == 1 else y.shape} labels "
                             f"for kernels of size n={self.kernels.n}")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        y.setflags(write=False)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.kernels.n

    @property
    def M(self) -> int:
        return self.kernels.M


def conjugate_exponent(p: float) -> float:
    """The ``p*`` with ``1/p + 1/p* = 1``."""
    if not p > 1:
        raise ValueError(f"conjugate exponent needs p > 1, got {p}")
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def block_norm(block_norms, p: float) -> float:
    """l_p norm of a vector of per-block norms.

    The largest entry is factored out first, so large ``p`` cannot overflow.
    """
    s = np.asarray(block_norms, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("block norms must be nonnegative")
    if not p >= 1:
        raise ValueError("p must be >= 1")
    top = float(s.max(initial=0.0))
    if top == 0.0:
        return 0.0
    if math.isinf(p):
        return top
    if p >= 16:
        # log-domain: top * exp(logsumexp(p * log(s/top)) / p)
        with np.errstate(divide="ignore"):
            logs = p * np.log(s / top)
        return top * math.exp(np.logaddexp.reduce(logs) / p)
    return top * float(np.sum((s / top) ** p)) ** (1.0 / p)


def dual_loss(t, y, loss: str = "hinge"):
    """Fenchel conjugate of the loss in its first argument.

    hinge: ``t/y`` on ``-1 <= t/y <= 0`` and ``+inf`` elsewhere.
    squared (``(a - y)^2``): ``t^2/4 + t*y``.
    """
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if loss == "hinge":
        r = t / y
        out = np.where((r >= -1.0) & (r <= 0.0), r, np.inf)
    elif loss == "squared":
        out = 0.25 * t * t + t * y
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return out[()] if out.ndim == 0 else out


def primal_loss(f, y, loss: str = "hinge"):
    f = np.asarray(f, dtype=np.float64)
    if loss == "hinge":
        return np.maximum(0.0, 1.0 - y * f)
    if loss == "squared":
        return (f - y) ** 2
    raise ValueError(f"unknown loss {loss!r}")


def _check_point(point: DualPoint, prob: LabeledProblem):
    a = np.asarray(point.alpha, dtype=np.float64)
    g = np.asarray(point.gamma, dtype=np.float64)
    if a.shape != (prob.n,) or g.shape != (prob.n,):
        raise ValueError(f"dual point of shape {a.shape}/{g.shape} for n={prob.n}")
    if prob.config.mu == 0:
        g = np.zeros(prob.n)
    return a, g


def _loss_term(a, cfg: MklConfig):
    if cfg.loss == "hinge":
        if np.any(a < 0) or np.any(a > cfg.c):
            return -np.inf, None
        return float(np.sum(a)), np.ones_like(a)
    return float(np.sum(a - a * a / (4.0 * cfg.c))), 1.0 - a / (2.0 * cfg.c)


def _block_term(v, prob: LabeledProblem, with_grad: bool):
    """``1/2 ||s||_{p*}^2`` and its gradient with respect to ``v``."""
    cfg = prob.config
    Kv, q = quad_forms(prob.kernels.matrices, v)
    s = np.sqrt(np.maximum(q, cfg.smooth_eps))
    ps = cfg.p_star
    S = block_norm(s, ps)
    val = 0.5 * S * S
    if not with_grad:
        return val, None
    # d(1/2 S^2)/ds_m = S^{2-p*} s_m^{p*-1}; ds_m/dv = K_m v / s_m off the floor.
    w = np.where(q > cfg.smooth_eps, (s / S) ** (ps - 2.0), 0.0)
    return val, w @ Kv


def evaluate(alpha, gamma, prob: LabeledProblem, with_grad: bool = True):
    """Objective value and ``(grad_alpha, grad_gamma)`` in one pass.

    ``grad_gamma`` is ``None`` when ``mu == 0``.
    """
    cfg = prob.config
    y = prob.labels
    v = alpha * y - gamma
    lval, lgrad = _loss_term(alpha, cfg)
    bval, bgrad = _block_term(v, prob, with_grad and lval > -np.inf)
    val = lval - bval
    g_gamma = None
    if cfg.mu > 0:
        Kg = prob.kernels.total @ gamma
        val -= float(gamma @ Kg) / (2.0 * cfg.mu)
    if not with_grad:
        return val, None, None
    if lgrad is None:
        raise ValueError("gradient requested outside the feasible box")
    g_alpha = lgrad - y * bgrad
    if cfg.mu > 0:
        g_gamma = bgrad - Kg / cfg.mu
    return val, g_alpha, g_gamma


def dual_objective(point: DualPoint, prob: LabeledProblem) -> float:
    """Dual objective at ``point``; ``-inf`` outside the hinge box."""
    a, g = _check_point(point, prob)
    return evaluate(a, g, prob, with_grad=False)[0]


def dual_gradient(point: DualPoint, prob: LabeledProblem):
    """Gradient of :func:`dual_objective`.

    Exact wherever every ``v' K_m v`` exceeds ``smooth_eps``; kernels sitting
    on the smoothing floor contribute nothing.
    """
    a, g = _check_point(point, prob)
    _, ga, gg = evaluate(a, g, prob)
    return ga, gg


def primal_objective(theta, point: DualPoint, prob: LabeledProblem) -> float:
    """Primal objective at the classifier induced by ``theta`` and ``point``.

    The classifier is ``w_m = theta_m * sum_i alpha_i y_i Phi_m(x_i)``, so
    ``||w_m||^2 = theta_m^2 z' K_m z`` with ``z = alpha * y`` and
    ``f(x_i) = sum_m theta_m (K_m z)_i``. ``theta`` may be a
    :class:`~blockmkl.weights.KernelWeights` (its effective scale is used)
    or a plain array.
    """
    cfg = prob.config
    th = np.asarray(getattr(theta, "effective", theta), dtype=np.float64)
    if th.shape != (prob.M,):
        raise ValueError(f"{th.shape} weights for M={prob.M} kernels")
    if np.any(th < 0):
        raise ValueError("kernel weights must be nonnegative")
    a, _ = _check_point(point, prob)
    z = a * prob.labels
    Kz, q = quad_forms(prob.kernels.matrices, z)
    f = th @ Kz
    wn = th * np.sqrt(np.maximum(q, 0.0))
    risk = cfg.c * float(np.sum(primal_loss(f, prob.labels, cfg.loss)))
    return risk + 0.5 * block_norm(wn, cfg.p) ** 2 + 0.5 * cfg.mu * float(wn @ wn)
