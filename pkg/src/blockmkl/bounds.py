"""Rademacher complexity and generalization bounds for block-norm MKL.

The hypothesis class is linear classifiers whose vector of per-kernel norms
has ``C1 ||.||_p + C2 ||.||_q <= 1``. The bounds assume normalized kernels
(``k(x, x) <= 1``), and the generalization bound additionally assumes a loss
with ``l(0) = 0``, Lipschitz constant ``L`` and values ``<= 1``. The hinge
loss on raw scores is not bounded, so the numbers are reported as-is rather
than checked against a trained model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundParams:
    M: int
    n: int
    p: float = 1.0
    q: float = 2.0
    c1: float = 1.0
    c2: float = 0.0
    lipschitz: float = 1.0
    delta: float = 0.05
    emp_risk: float = 0.0

    def __post_init__(self):
        if self.M < 1 or self.n < 1:
            raise ValueError("M and n must be >= 1")
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError("p and q must be >= 1")
        if self.c1 < 0 or self.c2 < 0 or abs(self.c1 + self.c2 - 1.0) > 1e-12:
            raise ValueError("c1, c2 must be nonnegative and sum to 1")
        if not self.lipschitz > 0:
            raise ValueError("lipschitz must be > 0")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.emp_risk >= 0:
            raise ValueError("emp_risk must be >= 0")

    def replace(self, **changes) -> "BoundParams":
        return BoundParams(**{**self.__dict__, **changes})


def norm_factor(M: int, p: float, q: float, c1: float, c2: float) -> float:
    """``M / (C1 M^(1/p) + C2 M^(1/q))``."""
    return M / (c1 * M ** (1.0 / p) + c2 * M ** (1.0 / q))


def rademacher_bound(params: BoundParams, sharpen: bool = True) -> float:
    """Upper bound on the Rademacher complexity of the class.

    General case: ``factor * (sqrt(2 ln M / n) + sqrt(1/n))``; when both
    ``p >= 2`` and ``q >= 2`` the sharper ``factor * sqrt(1/n)`` applies
    unless ``sharpen`` is off.
    """
    pr = params
    factor = norm_factor(pr.M, pr.p, pr.q, pr.c1, pr.c2)
    if sharpen and pr.p >= 2 and pr.q >= 2:
        return factor * math.sqrt(1.0 / pr.n)
    return factor * (math.sqrt(2.0 * math.log(pr.M) / pr.n) + math.sqrt(1.0 / pr.n))


def generalization_bound(params: BoundParams, rademacher: float) -> float:
    """``emp_risk + 2 L R + sqrt(8 ln(2/delta) / n)``, holding with
    probability at least ``1 - delta``."""
    if not rademacher >= 0:
        raise ValueError("rademacher complexity must be >= 0")
    pr = params
    return (pr.emp_risk + 2.0 * pr.lipschitz * rademacher
            + math.sqrt(8.0 * math.log(2.0 / pr.delta) / pr.n))


@dataclass(frozen=True)
class BoundRow:
    name: str
    p: float
    q: float
    c1: float
    c2: float
    rademacher: float
    generalization: float


def _row(name, base: BoundParams, p, q, c1):
    pr = base.replace(p=p, q=q, c1=c1, c2=1.0 - c1)
    r = rademacher_bound(pr)
    return BoundRow(name, p, q, c1, 1.0 - c1, r, generalization_bound(pr, r))


def literature_consistency_report(M: int, n: int, c1_grid=(1.0, 0.75, 0.5, 0.25, 0.0),
                                  lipschitz=1.0, delta=0.05, emp_risk=0.0) -> list:
    """Bounds for the classical settings next to elastic-net rows.

    Rows: l1 (``p=1``), l4/3 (``p=4/3``), l2 (``p=2`` through the general
    bound, the ``c1=0`` end of the elastic net), l2_sharp (``p=q=2``, the
    improved bound), then the elastic net (``p=1, q=2``) across ``c1_grid``.
    Moving ``c1`` from 1 to 0 inflates the elastic-net bound by up to
    ``sqrt(M)``.
    """
    if M < 2:
        raise ValueError("the report needs M >= 2")
    base = BoundParams(M=M, n=n, lipschitz=lipschitz, delta=delta, emp_risk=emp_risk)
    rows = [
        _row("l1", base, 1.0, 1.0, 1.0),
        _row("l4/3", base, 4.0 / 3.0, 4.0 / 3.0, 1.0),
        _row("l2", base, 2.0, 1.0, 1.0),
        _row("l2_sharp", base, 2.0, 2.0, 1.0),
    ]
    rows.extend(_row(f"elastic_net(c1={c1:g})", base, 1.0, 2.0, float(c1)) for c1 in c1_grid)
    return rows


def format_report(rows, csv: bool = False) -> str:
    header = ("setting", "p", "q", "c1", "c2", "rademacher", "generalization")
    cells = [[r.name, f"{r.p:.6g}", f"{r.q:.6g}", f"{r.c1:.6g}", f"{r.c2:.6g}",
              f"{r.rademacher:.10g}", f"{r.generalization:.10g}"] for r in rows]
    if csv:
        return "\n".join(",".join(c) for c in [list(header), *cells]) + "\n"
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(header)]
    fmt = "  ".join(f"{{:<{w}}}" if i == 0 else f"{{:>{w}}}" for i, w in enumerate(widths))
    return "\n".join(fmt.format(*c) for c in [header, *cells]) + "\n"
