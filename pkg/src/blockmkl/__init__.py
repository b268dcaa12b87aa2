"""Block-norm multiple kernel learning with elastic-net regularization."""
__version__ = "1.0.0"

from ._backend import BACKEND
from .bounds import BoundParams, generalization_bound, literature_consistency_report, rademacher_bound
from .kernels import KernelSet, KernelSpec, compute_gram, normalize_gram, read_gram, write_gram
from .model import (CrossKernelSet, TrainedModel, auc, load_model, partial_auc,
                    predict_scores, save_model)
from .objective import DualPoint, LabeledProblem, MklConfig, dual_gradient, dual_objective
from .pipeline import run_sweep, train
from .solver import SolverConfig, SolveResult, solve
from .synth import Scenario, bayes_error, generate
from .weights import KernelWeights, theta_from_solution

__all__ = [
    "BACKEND", "BoundParams", "CrossKernelSet", "DualPoint", "KernelSet", "KernelSpec",
    "KernelWeights", "LabeledProblem", "MklConfig", "Scenario", "SolveResult",
    "SolverConfig", "TrainedModel", "auc", "bayes_error", "compute_gram", "dual_gradient",
    "dual_objective", "generalization_bound", "generate", "literature_consistency_report",
    "load_model", "normalize_gram", "partial_auc", "predict_scores", "rademacher_bound",
    "read_gram", "run_sweep", "save_model", "solve", "theta_from_solution", "train",
    "write_gram",
]
