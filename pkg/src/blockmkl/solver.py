"""Projected limited-memory quasi-Newton ascent on the MKL dual.

The variable vector is ``alpha`` followed (when ``mu > 0``) by ``gamma``.
Internally the solver minimizes the negated dual. Each iteration

1. splits coordinates into a binding set (at a bound with the gradient
   pushing outward) and a free set,
2. builds a quasi-Newton direction on the free set from the last
   ``history`` curvature pairs (two-loop recursion),
3. backtracks along the projected path ``P(x + t d)`` until the Armijo
   condition holds, falling back to the projected gradient whenever the
   quasi-Newton direction fails to descend.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .objective import DualPoint, LabeledProblem, evaluate

ARMIJO = 1e-4
SHRINK = 0.5
MIN_STEP = 1e-20
STALL_WINDOW = 10
STALL_RTOL = 1e-14  # ~50 ulps over the window: only genuine floating-point stagnation


class SolverError(RuntimeError):
    """Hard solver failure (non-finite objective or gradient)."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 5000
    history: int = 10
    seed: int = 0
    init: str = "center"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.history < 1:
            raise ValueError("history must be >= 1")
        if self.init not in ("center", "random"):
            raise ValueError("init must be 'center' or 'random'")


@dataclass
class SolveResult:
    point: DualPoint
    objective: float
    iterations: int
    converged: bool
    projected_grad_norm: float
    status: str = "converged"
    duality_gap: float | None = None
    trace: list = field(default_factory=list, repr=False)


def project_box(alpha, c: float) -> np.ndarray:
    """Clamp every entry into ``[0, c]``."""
    if not c > 0:
        raise ValueError("c must be > 0")
    return np.clip(np.asarray(alpha, dtype=np.float64), 0.0, c)


def projected_gradient(x, g, lo, hi) -> np.ndarray:
    """Ascent gradient ``g`` projected onto the tangent cone of the box."""
    pg = g.copy()
    pg[(x <= lo) & (g < 0)] = 0.0
    pg[(x >= hi) & (g > 0)] = 0.0
    return pg


def _two_loop(g, pairs, mask):
    q = g * mask
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        q -= a * y
        alphas.append(a)
    s, y, _ = pairs[-1]
    q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q * mask


def solve(prob: LabeledProblem, cfg: SolverConfig | None = None) -> SolveResult:
    cfg = cfg or SolverConfig()
    mcfg = prob.config
    n = prob.n
    nvar = 2 * n if mcfg.mu > 0 else n
    lo = np.full(nvar, -np.inf)
    hi = np.full(nvar, np.inf)
    if mcfg.boxed:
        lo[:n] = 0.0
        hi[:n] = mcfg.c

    x = np.zeros(nvar)
    start = min(mcfg.c, 1.0) / 2.0
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        x[:n] = rng.uniform(0.0, 2.0 * start, size=n)
    else:
        x[:n] = start
    zeros = np.zeros(n)

    def fg(x):
        a = x[:n]
        gam = x[n:] if mcfg.mu > 0 else zeros
        val, ga, gg = evaluate(a, gam, prob)
        grad = ga if gg is None else np.concatenate([ga, gg])
        if not (np.isfinite(val) and np.all(np.isfinite(grad))):
            raise SolverError("non-finite objective or gradient", _point(x, n, mcfg.mu))
        # minimize the negated dual
        return -val, -grad

    f, g = fg(x)
    trace = [-f]
    pairs: deque = deque(maxlen=cfg.history)
    status = "max_iter"
    it = 0
    for it in range(1, cfg.max_iter + 1):
        pgn = float(np.max(np.abs(projected_gradient(x, -g, lo, hi)), initial=0.0))
        if pgn <= cfg.tol:
            status = "converged"
            it -= 1
            break
        free = ~(((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0)))
        mask = free.astype(np.float64)
        d = -_two_loop(g, pairs, mask) if pairs else None
        if d is None or float(g @ d) >= 0:
            pairs.clear()
            d = -g * mask
            d *= min(1.0, 1.0 / max(float(np.max(np.abs(d))), 1e-300))

        step = _line_search(fg, x, f, g, d, lo, hi)
        if step is None and pairs:
            pairs.clear()
            d = -g * mask
            d *= min(1.0, 1.0 / max(float(np.max(np.abs(d))), 1e-300))
            step = _line_search(fg, x, f, g, d, lo, hi)
        if step is None:
            status = "stalled"
            break
        xn, fn, gn = step
        s = xn - x
        yv = gn - g
        sy = float(s @ yv)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(yv)) and sy > 0:
            pairs.append((s, yv, 1.0 / sy))
        x, f, g = xn, fn, gn
        trace.append(-f)
        if len(trace) > STALL_WINDOW:
            old = trace[-1 - STALL_WINDOW]
            if abs(trace[-1] - old) <= STALL_RTOL * max(1.0, abs(trace[-1])):
                status = "stalled"
                break

    pgn = float(np.max(np.abs(projected_gradient(x, -g, lo, hi)), initial=0.0))
    converged = pgn <= cfg.tol
    if converged:
        status = "converged"
    return SolveResult(point=_point(x, n, mcfg.mu), objective=-f, iterations=it,
                       converged=converged, projected_grad_norm=pgn, status=status,
                       trace=trace)


def _point(x, n, mu):
    gamma = x[n:].copy() if mu > 0 else np.zeros(n)
    return DualPoint(x[:n].copy(), gamma)


def _line_search(fg, x, f, g, d, lo, hi):
    t = 1.0
    while t >= MIN_STEP:
        xn = np.clip(x + t * d, lo, hi)
        dx = xn - x
        slope = float(g @ dx)
        if slope >= 0:
            t *= SHRINK
            continue
        fn, gn = fg(xn)
        if fn <= f + ARMIJO * slope:
            return xn, fn, gn
        t *= SHRINK
    return None
