"""End-to-end training and the synthetic sparsity sweep."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import TrainedModel, accuracy, build_model, predict_scores
from .objective import LabeledProblem, MklConfig, primal_objective
from .solver import SolverConfig, solve
from .synth import Scenario, bayes_error, generate
from .weights import theta_from_solution


def train(kernels, labels, config: MklConfig, solver_cfg: SolverConfig | None = None):
    """Solve the dual, recover weights, and certify with the duality gap.

    Returns ``(model, solve_result)``.
    """
    prob = LabeledProblem(kernels, labels, config)
    sol = solve(prob, solver_cfg)
    theta = theta_from_solution(sol, prob)
    sol.duality_gap = primal_objective(theta, sol.point, prob) - sol.objective
    return build_model(sol, prob, theta), sol


@dataclass(frozen=True)
class SweepRow:
    sparsity: float
    p: float
    mu: float
    mean_error: float
    stderr: float
    n_ok: int
    n_failed: int
    bayes_error: float


def test_error(model: TrainedModel, cross, y_test) -> float:
    return 1.0 - accuracy(predict_scores(model, cross), y_test)


test_error.__test__ = False


def run_sweep(base: Scenario, sparsities, ps, mus, seeds, c: float = 1.0,
              solver_cfg: SolverConfig | None = None, loss: str = "hinge") -> list:
    """Test error of every (sparsity, p, mu) cell averaged over ``seeds``.

    Each dataset is generated once per (sparsity, seed) and shared by all
    models. A failing cell run is counted in ``n_failed`` and skipped.
    """
    errors = {(nu, p, mu): [] for nu in sparsities for p in ps for mu in mus}
    failed = {key: 0 for key in errors}
    for nu in sparsities:
        for seed in seeds:
            data = generate(replace(base, sparsity=nu, seed=seed))
            for p in ps:
                for mu in mus:
                    cfg = MklConfig(p=p, mu=mu, c=c, loss=loss)
                    try:
                        model, _ = train(data.kernels, data.y_train, cfg, solver_cfg)
                        errors[(nu, p, mu)].append(test_error(model, data.cross, data.y_test))
                    except (ArithmeticError, RuntimeError, ValueError):
                        failed[(nu, p, mu)] += 1
    rows = []
    for (nu, p, mu), errs in errors.items():
        k = len(errs)
        mean = float(np.mean(errs)) if k else math.nan
        se = float(np.std(errs, ddof=1)) / math.sqrt(k) if k > 1 else math.nan
        rows.append(SweepRow(nu, MklConfig(p=p).p, mu, mean, se, k, failed[(nu, p, mu)],
                             bayes_error(replace(base, sparsity=nu))))
    return rows


def format_sweep(rows) -> str:
    head = "sparsity,p,mu,mean_error,stderr,n_ok,n_failed,bayes_error\n"
    return head + "".join(
        f"{r.sparsity:.17g},{r.p:.17g},{r.mu:.17g},{r.mean_error:.17g},{r.stderr:.17g},"
        f"{r.n_ok},{r.n_failed},{r.bayes_error:.17g}\n" for r in rows)
