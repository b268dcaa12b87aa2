"""Trained classifiers: scoring, evaluation metrics and the model file."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .objective import MklConfig
from .weights import KernelWeights, expansion_vector, theta_from_solution

MODEL_MAGIC = "MKLMODEL"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ModelVersionError(ModelFormatError):
    pass


@dataclass(frozen=True)
class CrossKernelSet:
    """M matrices of shape ``n_train x n_test`` holding ``k_m(x_i, x_test_j)``."""

    matrices: np.ndarray

    def __post_init__(self):
        stack = np.array(self.matrices, dtype=np.float64)
        if stack.ndim == 2:
            stack = stack[None]
        if stack.ndim != 3:
            raise ValueError("cross kernels must be a stack of 2-D matrices")
        stack.setflags(write=False)
        object.__setattr__(self, "matrices", stack)

    @classmethod
    def from_list(cls, matrices):
        mats = [np.asarray(K, dtype=np.float64) for K in matrices]
        if not mats or len({K.shape for K in mats}) != 1:
            raise ValueError("cross kernel matrices must share one shape")
        return cls(np.stack(mats))

    @property
    def M(self) -> int:
        return self.matrices.shape[0]


@dataclass(frozen=True)
class TrainedModel:
    v: np.ndarray
    theta: KernelWeights
    config: MklConfig
    kernel_names: tuple
    n_train: int
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.v, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "kernel_names", tuple(self.kernel_names))
        if v.shape != (self.n_train,):
            raise ValueError(f"expansion vector of length {v.size} for n_train={self.n_train}")
        if self.theta.theta.shape != (len(self.kernel_names),):
            raise ValueError("one weight per kernel name is required")
        for name in self.kernel_names:
            if not name or any(ch.isspace() for ch in name):
                raise ValueError(f"kernel name {name!r} must be a nonempty token")

    @property
    def M(self) -> int:
        return len(self.kernel_names)

    def __eq__(self, other):
        if not isinstance(other, TrainedModel):
            return NotImplemented
        return (np.array_equal(self.v, other.v)
                and np.array_equal(self.theta.effective, other.theta.effective)
                and self.config == other.config
                and self.kernel_names == other.kernel_names
                and self.n_train == other.n_train
                and self.diagnostics == other.diagnostics)

    __hash__ = None


def build_model(sol, prob, theta: KernelWeights | None = None) -> TrainedModel:
    """Bundle a solved problem into a model carrying effective (raw) weights."""
    theta = theta if theta is not None else theta_from_solution(sol, prob)
    raw = KernelWeights(theta.effective, "raw", 1.0)
    diag = {
        "converged": bool(sol.converged),
        "iterations": int(sol.iterations),
        "objective": float(sol.objective),
        "projected_grad_norm": float(sol.projected_grad_norm),
    }
    if sol.duality_gap is not None:
        diag["duality_gap"] = float(sol.duality_gap)
    return TrainedModel(expansion_vector(sol.point, prob), raw, prob.config,
                        prob.kernels.names, prob.n, diag)


def predict_scores(model: TrainedModel, cross) -> np.ndarray:
    """``f(x_j) = sum_m theta_m sum_i v_i k_m(x_i, x_j)``; no bias term."""
    stack = getattr(cross, "matrices", cross)
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim == 2:
        stack = stack[None]
    if stack.shape[0] != model.M:
        raise ValueError(f"{stack.shape[0]} cross kernels for a model with M={model.M}")
    if stack.shape[1] != model.n_train:
        raise ValueError(f"cross kernels have {stack.shape[1]} rows, model has "
                         f"n_train={model.n_train}")
    per_kernel = np.einsum("i,mij->mj", model.v, stack)
    return model.theta.effective @ per_kernel


def _check_pair(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError(f"{s.shape} scores vs {y.shape} labels")
    return s, y


def accuracy(scores, labels) -> float:
    """Fraction of ``sign(score) == label``; a zero score counts as positive."""
    s, y = _check_pair(scores, labels)
    if s.size == 0:
        raise ValueError("no samples")
    pred = np.where(s >= 0, 1.0, -1.0)
    return float(np.mean(pred == y))


def _classes(s, y):
    pos = s[y > 0]
    neg = s[y <= 0]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("AUC needs both classes present")
    return pos, neg


def auc(scores, labels) -> float:
    """Mann-Whitney statistic; tied positive/negative pairs count one half."""
    s, y = _check_pair(scores, labels)
    pos, neg = _classes(s, y)
    neg_sorted = np.sort(neg)
    below = np.searchsorted(neg_sorted, pos, side="left")
    at_or_below = np.searchsorted(neg_sorted, pos, side="right")
    wins = below.sum() + 0.5 * (at_or_below - below).sum()
    return float(wins / (pos.size * neg.size))


def roc_curve(scores, labels):
    """ROC vertices ``(fpr, tpr)`` with one vertex per distinct score.

    Tied scores move diagonally, which is what gives ties half credit.
    """
    s, y = _check_pair(scores, labels)
    pos, neg = _classes(s, y)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order] > 0
    last = np.r_[np.flatnonzero(np.diff(s_sorted)), s_sorted.size - 1]
    tp = np.cumsum(y_sorted)[last]
    fp = np.cumsum(~y_sorted)[last]
    fpr = np.r_[0.0, fp / neg.size]
    tpr = np.r_[0.0, tp / pos.size]
    return fpr, tpr


def partial_auc(scores, labels, fpr_max: float = 0.1) -> float:
    """ROC area over ``FPR in [0, fpr_max]`` divided by ``fpr_max``."""
    if not 0 < fpr_max <= 1:
        raise ValueError("fpr_max must lie in (0, 1]")
    fpr, tpr = roc_curve(scores, labels)
    stop = np.searchsorted(fpr, fpr_max, side="right")
    xs = list(fpr[:stop])
    ys = list(tpr[:stop])
    if xs[-1] < fpr_max:
        x0, x1 = fpr[stop - 1], fpr[stop]
        y0, y1 = tpr[stop - 1], tpr[stop]
        xs.append(fpr_max)
        ys.append(y0 + (y1 - y0) * (fpr_max - x0) / (x1 - x0))
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    area = float(np.sum(np.diff(xs) * 0.5 * (ys[1:] + ys[:-1])))
    return area / fpr_max


# -- model file ---------------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def _diag_fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return _fmt(value)


def dumps_model(model: TrainedModel) -> str:
    cfg = model.config
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        f"p {_fmt(cfg.p)}",
        f"mu {_fmt(cfg.mu)}",
        f"c {_fmt(cfg.c)}",
        f"loss {cfg.loss}",
        f"n {model.n_train}",
        f"M {model.M}",
        "theta " + " ".join(_fmt(t) for t in model.theta.effective),
        "v " + " ".join(_fmt(t) for t in model.v),
        "names " + " ".join(model.kernel_names),
        f"smooth_eps {_fmt(cfg.smooth_eps)}",
        f"en_eps {_fmt(cfg.en_eps)}",
    ]
    lines.extend(f"diag {k} {_diag_fmt(v)}" for k, v in model.diagnostics.items())
    return "\n".join(lines) + "\n"


def save_model(model: TrainedModel, path) -> None:
    """Write the line-oriented text model.

    Required lines, in order: ``MKLMODEL 1``, ``p``, ``mu``, ``c``, ``loss``,
    ``n``, ``M``, ``theta``, ``v``, ``names``. Optional trailing lines:
    ``smooth_eps``, ``en_eps`` and ``diag <key> <value>``.
    """
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_model(model), encoding="ascii")
    tmp.replace(path)


_REQUIRED = ("p", "mu", "c", "loss", "n", "M", "theta", "v", "names")


def _parse_diag(value: str):
    if value in ("true", "false"):
        return value == "true"
    try:
        return int(value)
    except ValueError:
        return float(value)


def loads_model(text: str) -> TrainedModel:
    data = text.encode("ascii", errors="replace")
    offsets = []
    pos = 0
    for line in data.split(b"\n"):
        offsets.append(pos)
        pos += len(line) + 1
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ModelFormatError("empty model file", 0)
    head = lines[0].split()
    if len(head) != 2 or head[0] != MODEL_MAGIC:
        raise ModelFormatError("missing MKLMODEL header", 0)
    if head[1] != str(MODEL_VERSION):
        raise ModelVersionError(f"unsupported model version {head[1]!r} "
                                f"(this reader handles version {MODEL_VERSION})", 0)
    fields = {}
    extras = {}
    diag = {}
    for idx, line in enumerate(lines[1:], start=1):
        key, _, rest = line.partition(" ")
        if idx <= len(_REQUIRED):
            want = _REQUIRED[idx - 1]
            if key != want:
                raise ModelFormatError(f"expected '{want}' line, found {key!r}", offsets[idx])
            fields[key] = (rest, offsets[idx])
        elif key in ("smooth_eps", "en_eps"):
            extras[key] = rest
        elif key == "diag":
            name, _, value = rest.partition(" ")
            diag[name] = _parse_diag(value)
        else:
            raise ModelFormatError(f"unknown line {key!r}", offsets[idx])
    if len(fields) < len(_REQUIRED):
        missing = _REQUIRED[len(fields)]
        raise ModelFormatError(f"truncated model file: '{missing}' line missing", len(data))
    try:
        n = int(fields["n"][0])
        M = int(fields["M"][0])
        theta = np.array([float(t) for t in fields["theta"][0].split()])
        v = np.array([float(t) for t in fields["v"][0].split()])
        cfg = MklConfig(p=float(fields["p"][0]), mu=float(fields["mu"][0]),
                        c=float(fields["c"][0]), loss=fields["loss"][0].strip(),
                        **{k: float(x) for k, x in extras.items()})
    except ValueError as exc:
        raise ModelFormatError(f"malformed model field: {exc}") from None
    names = tuple(fields["names"][0].split())
    if theta.size != M:
        raise ModelFormatError(f"theta has {theta.size} entries, expected M={M}",
                               fields["theta"][1])
    if v.size != n:
        raise ModelFormatError(f"v has {v.size} entries, expected n={n}", fields["v"][1])
    if len(names) != M:
        raise ModelFormatError(f"{len(names)} names, expected M={M}", fields["names"][1])
    return TrainedModel(v, KernelWeights(theta, "raw", 1.0), cfg, names, n, diag)


def load_model(path) -> TrainedModel:
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ModelFormatError("model file is not ASCII text", exc.start) from None
    return loads_model(text)


def evaluate_scores(scores, labels, fpr_max: float = 0.1) -> dict:
    """Accuracy, AUC and partial AUC in one dict."""
    return {
        "accuracy": accuracy(scores, labels),
        "auc": auc(scores, labels),
        f"pauc@{fpr_max:g}": partial_auc(scores, labels, fpr_max),
    }
