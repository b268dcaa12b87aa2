"""Synthetic block-structured Gaussian classification data.

Samples are ``x | y ~ N(y * mu, I)`` with ``y = +-1`` equally likely, so the
Bayes error is exactly ``Phi(-||mu||)``. The features split into ``M``
blocks of ``block_dim`` coordinates and each block gets its own normalized
linear kernel. ``sparsity`` moves the class-mean energy from uniform over
blocks (0) to entirely in the first block (1).

Random numbers come from SplitMix64 in counter form: draw ``i`` (1-based)
is ``mix(seed + i * 0x9E3779B97F4A7C15 mod 2^64)``, and a uniform double is
``(draw >> 11) * 2^-53``. The stream is consumed as: ``n_train + n_test``
label uniforms (``y = +1`` iff ``u < 0.5``), then uniforms in pairs
``(u1, u2)`` for Box-Muller normals ``r cos(2 pi u2), r sin(2 pi u2)`` with
``r = sqrt(-2 ln(1 - u1))``, filling train rows then test rows, row-major.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .kernels import KernelSet, normalize_cross, normalize_gram, write_gram, write_labels
from .model import CrossKernelSet

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class Scenario:
    M: int = 6
    block_dim: int = 10
    sparsity: float = 0.0
    bayes_target: float = 0.1
    n_train: int = 500
    n_test: int = 2000
    seed: int = 0

    def __post_init__(self):
        if min(self.M, self.block_dim, self.n_train, self.n_test) < 1:
            raise ValueError("counts must be >= 1")
        if not 0 <= self.sparsity <= 1:
            raise ValueError("sparsity must lie in [0, 1]")
        if not 0 < self.bayes_target < 0.5:
            raise ValueError("bayes_target must lie in (0, 0.5)")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def dim(self) -> int:
        return self.M * self.block_dim


class SplitMix64:
    """Counter-based SplitMix64 stream."""

    def __init__(self, seed: int):
        self.seed = np.uint64(seed)
        self.counter = 0

    def raw(self, count: int) -> np.ndarray:
        i = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        with np.errstate(over="ignore"):
            z = self.seed + i * GOLDEN
            z = (z ^ (z >> np.uint64(30))) * MIX1
            z = (z ^ (z >> np.uint64(27))) * MIX2
        return z ^ (z >> np.uint64(31))

    def uniform(self, count: int) -> np.ndarray:
        return (self.raw(count) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normal(self, count: int) -> np.ndarray:
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        ang = 2.0 * np.pi * u[:, 1]
        return np.column_stack([r * np.cos(ang), r * np.sin(ang)]).ravel()[:count]


def mean_vector(scn: Scenario) -> np.ndarray:
    """Class mean with ``||mu|| = Phi^-1(1 - bayes_target)``, spread evenly
    inside each block."""
    energy = np.full(scn.M, 1.0 - scn.sparsity)
    energy[0] += scn.sparsity
    radius = NormalDist().inv_cdf(1.0 - scn.bayes_target)
    block_sq = energy / energy.sum() * radius ** 2
    return np.repeat(np.sqrt(block_sq / scn.block_dim), scn.block_dim)


def bayes_error(scn: Scenario) -> float:
    """``Phi(-||mu||)`` for the scenario's class mean."""
    r = float(np.linalg.norm(mean_vector(scn)))
    return 0.5 * math.erfc(r / math.sqrt(2.0))


@dataclass(frozen=True)
class SynthData:
    scenario: Scenario
    mean: np.ndarray
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    kernels: KernelSet
    cross: CrossKernelSet


def _block_kernels(scn, x_train, x_test):
    grams, crosses = [], []
    for m in range(scn.M):
        sl = slice(m * scn.block_dim, (m + 1) * scn.block_dim)
        a, b = x_train[:, sl], x_test[:, sl]
        G = a @ a.T
        G = np.triu(G) + np.triu(G, 1).T
        grams.append(normalize_gram(G))
        crosses.append(normalize_cross(a @ b.T, np.einsum("ij,ij->i", a, a),
                                       np.einsum("ij,ij->i", b, b)))
    names = tuple(f"block{m + 1}" for m in range(scn.M))
    return KernelSet.from_list(grams, names), CrossKernelSet.from_list(crosses)


def generate(scn: Scenario) -> SynthData:
    rng = SplitMix64(scn.seed)
    n = scn.n_train + scn.n_test
    y = np.where(rng.uniform(n) < 0.5, 1.0, -1.0)
    mu = mean_vector(scn)
    x = rng.normal(n * scn.dim).reshape(n, scn.dim) + y[:, None] * mu[None, :]
    x_train, x_test = x[:scn.n_train], x[scn.n_train:]
    y_train, y_test = y[:scn.n_train], y[scn.n_train:]
    kernels, cross = _block_kernels(scn, x_train, x_test)
    return SynthData(scn, mu, x_train, y_train, x_test, y_test, kernels, cross)


def label_alignment(K, y) -> float:
    """``y' K y / (n ||K||_F)``: how strongly a kernel lines up with the labels."""
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(y @ K @ y) / (y.size * float(np.linalg.norm(K)))


def write_dataset(data: SynthData, outdir, binary: bool = False) -> dict:
    """Write kernels, cross kernels, labels and a ``scenario.txt`` manifest.

    Returns the written paths keyed by role.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".bin" if binary else ".txt"
    paths = {"train_kernels": [], "cross_kernels": []}
    for name, K, C in zip(data.kernels.names, data.kernels.matrices, data.cross.matrices):
        kp = out / f"train_{name}{ext}"
        cp = out / f"cross_{name}{ext}"
        write_gram(kp, K, binary=binary)
        write_gram(cp, C, binary=binary, cross=True)
        paths["train_kernels"].append(kp)
        paths["cross_kernels"].append(cp)
    paths["train_labels"] = out / "train_labels.txt"
    paths["test_labels"] = out / "test_labels.txt"
    write_labels(paths["train_labels"], data.y_train)
    write_labels(paths["test_labels"], data.y_test)
    manifest = dict(asdict(data.scenario))
    manifest["rng"] = "splitmix64-counter"
    manifest["bayes_error"] = format(bayes_error(data.scenario), ".17g")
    paths["scenario"] = out / "scenario.txt"
    paths["scenario"].write_text("".join(f"{k}={v}\n" for k, v in manifest.items()),
                                 encoding="ascii")
    return paths
