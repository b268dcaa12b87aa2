"""Gram matrices for the base kernels: construction, normalization, PSD
checks and file I/O.

Gram matrices are plain ``float64`` ndarrays. A :class:`KernelSet` stacks M
of them into one read-only ``(M, n, n)`` array.
"""
from __future__ import annotations

import struct
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import _backend

SYM_TOL = 1e-12
PSD_CAP = 2000
BINARY_MAGIC = b"GRAM1"
BINARY_RECT_MAGIC = b"GRAMR"

KINDS = ("linear", "rbf", "polynomial", "spectrum", "precomputed")


class KernelError(ValueError):
    """Invalid kernel input or malformed kernel file."""


@dataclass(frozen=True)
class KernelSpec:
    """Description of one base kernel.

    ``rbf`` is ``exp(-||x - x'||^2 / (2 bandwidth^2))``; ``polynomial`` is
    ``(<x, x'> + offset)^degree``; ``spectrum`` counts shared contiguous
    ``k``-grams with multiplicity.
    """

    kind: str
    bandwidth: float | None = None
    degree: int | None = None
    offset: float = 0.0
    k: int | None = None
    path: str | None = None
    normalize: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise KernelError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not (self.bandwidth is not None and self.bandwidth > 0):
            raise KernelError("rbf kernel needs bandwidth > 0")
        if self.kind == "polynomial" and not (self.degree is not None and self.degree >= 1):
            raise KernelError("polynomial kernel needs degree >= 1")
        if self.kind == "spectrum" and not (self.k is not None and self.k >= 1):
            raise KernelError("spectrum kernel needs k >= 1")
        if self.kind == "precomputed" and not self.path:
            raise KernelError("precomputed kernel needs a path")

    @property
    def modality(self) -> str:
        if self.kind == "spectrum":
            return "string"
        if self.kind == "precomputed":
            return "none"
        return "vector"

    @property
    def name(self) -> str:
        if self.kind == "rbf":
            return f"rbf{self.bandwidth:g}"
        if self.kind == "polynomial":
            return f"poly{self.degree}"
        if self.kind == "spectrum":
            return f"spectrum{self.k}"
        if self.kind == "precomputed":
            return Path(self.path).stem
        return "linear"

    @classmethod
    def parse(cls, text: str, normalize: bool = False) -> "KernelSpec":
        """Parse ``linear``, ``rbf:<bw>``, ``poly:<deg>[:<offset>]``,
        ``spectrum:<k>`` or ``precomputed:<path>``."""
        kind, _, rest = text.partition(":")
        args = rest.split(":") if rest else []
        try:
            if kind == "linear" and not args:
                return cls("linear", normalize=normalize)
            if kind == "rbf" and len(args) == 1:
                return cls("rbf", bandwidth=float(args[0]), normalize=normalize)
            if kind in ("poly", "polynomial") and len(args) in (1, 2):
                offset = float(args[1]) if len(args) == 2 else 0.0
                return cls("polynomial", degree=int(args[0]), offset=offset,
                           normalize=normalize)
            if kind == "spectrum" and len(args) == 1:
                return cls("spectrum", k=int(args[0]), normalize=normalize)
            if kind == "precomputed" and rest:
                return cls("precomputed", path=rest, normalize=normalize)
        except ValueError as exc:
            raise KernelError(f"bad kernel spec {text!r}: {exc}") from None
        raise KernelError(f"bad kernel spec {text!r}")


@dataclass(frozen=True)
class KernelSet:
    """M Gram matrices over one shared sample index set."""

    matrices: np.ndarray
    names: tuple = field(default=())

    def __post_init__(self):
        stack = np.array(self.matrices, dtype=np.float64, order="C", copy=True)
        if stack.ndim == 2:
            stack = stack[None]
        if stack.ndim != 3 or stack.shape[0] < 1:
            raise KernelError("a kernel set needs at least one matrix")
        if stack.shape[1] != stack.shape[2]:
            raise KernelError("kernel matrices must be square and share the same n")
        names = tuple(self.names) or tuple(f"k{m}" for m in range(stack.shape[0]))
        if len(names) != stack.shape[0]:
            raise KernelError("one name per kernel matrix is required")
        stack.setflags(write=False)
        object.__setattr__(self, "matrices", stack)
        object.__setattr__(self, "names", names)
        total = stack.sum(axis=0)
        total.setflags(write=False)
        object.__setattr__(self, "_total", total)

    @property
    def M(self) -> int:
        return self.matrices.shape[0]

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    @property
    def total(self) -> np.ndarray:
        """Sum of all base kernels."""
        return self._total

    def __len__(self):
        return self.M

    def __getitem__(self, m):
        return self.matrices[m]

    @classmethod
    def from_list(cls, matrices: Sequence[np.ndarray], names=()) -> "KernelSet":
        mats = [np.asarray(K, dtype=np.float64) for K in matrices]
        if not mats:
            raise KernelError("a kernel set needs at least one matrix")
        shapes = {K.shape for K in mats}
        if len(shapes) != 1:
            raise KernelError(f"kernel matrices have differing shapes {sorted(shapes)}")
        return cls(np.stack(mats), tuple(names))


class PsdReport(NamedTuple):
    is_psd: bool | None
    min_eigenvalue: float | None
    threshold: float | None


def _as_vectors(data) -> np.ndarray:
    if any(isinstance(x, (str, bytes)) for x in data):
        raise KernelError("mixed modality: vector kernel given string data")
    try:
        X = np.asarray(data, dtype=np.float64)
    except ValueError:
        raise KernelError("vectors must all have the same dimension") from None
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise KernelError("vectors must all have the same dimension")
    return np.ascontiguousarray(X)


def _as_strings(data) -> list:
    if not all(isinstance(x, (str, bytes)) for x in data):
        raise KernelError("mixed modality: spectrum kernel needs string data")
    return list(data)


def ngram_counts(s, k: int) -> Counter:
    """Multiset of contiguous ``k``-grams of ``s``."""
    return Counter(s[i:i + k] for i in range(len(s) - k + 1))


def _count_table(strings, k, vocab):
    indptr = [0]
    ids, cnts = [], []
    for s in strings:
        row = sorted((vocab.setdefault(g, len(vocab)), c) for g, c in ngram_counts(s, k).items())
        ids.extend(i for i, _ in row)
        cnts.extend(c for _, c in row)
        indptr.append(len(ids))
    return (np.asarray(indptr, dtype=np.int64), np.asarray(ids, dtype=np.int64),
            np.asarray(cnts, dtype=np.float64))


def _spectrum(a, b, k, symmetric):
    vocab: dict = {}
    ta = _count_table(a, k, vocab)
    tb = ta if symmetric else _count_table(b, k, vocab)
    return _backend.sparse_count_gram(*ta, *tb, symmetric)


def _raw_gram(spec: KernelSpec, a, b=None) -> np.ndarray:
    symmetric = b is None
    if spec.kind == "spectrum":
        a = _as_strings(a)
        b = a if symmetric else _as_strings(b)
        return _spectrum(a, b, spec.k, symmetric)
    X = _as_vectors(a)
    Y = X if symmetric else _as_vectors(b)
    if X.shape[1] != Y.shape[1]:
        raise KernelError("vectors must all have the same dimension")
    if spec.kind == "rbf":
        D = _backend.sq_dists(X, Y, symmetric)
        return np.exp(-D / (2.0 * spec.bandwidth ** 2))
    G = X @ Y.T
    if symmetric:
        G = np.triu(G) + np.triu(G, 1).T
    if spec.kind == "polynomial":
        G = (G + spec.offset) ** spec.degree
    return G


def _self_similarity(spec: KernelSpec, data) -> np.ndarray:
    if spec.kind == "spectrum":
        counts = [ngram_counts(s, spec.k) for s in _as_strings(data)]
        return np.array([float(sum(c * c for c in cnt.values())) for cnt in counts])
    X = _as_vectors(data)
    if spec.kind == "rbf":
        return np.ones(X.shape[0])
    sq = np.einsum("ij,ij->i", X, X)
    if spec.kind == "polynomial":
        return (sq + spec.offset) ** spec.degree
    return sq


def compute_gram(spec: KernelSpec, data, other=None) -> np.ndarray:
    """Gram matrix of ``spec`` on ``data``.

    With ``other`` given, returns the ``len(data) x len(other)`` cross matrix
    instead; normalization then uses the self-similarities of both sides.
    """
    if spec.kind == "precomputed":
        K = read_gram(spec.path)
        return normalize_gram(K) if spec.normalize else K
    if data is None or len(data) == 0 or (other is not None and len(other) == 0):
        raise KernelError("empty data")
    if other is None:
        K = _raw_gram(spec, data)
        if spec.normalize:
            K = normalize_gram(K)
        return K
    K = _raw_gram(spec, data, other)
    if spec.normalize:
        K = normalize_cross(K, _self_similarity(spec, data), _self_similarity(spec, other))
    return K


def _check_diag(d, side=""):
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        raise KernelError(f"nonpositive {side}diagonal entry at index {int(bad[0])} "
                          f"(value {d[bad[0]]!r}); cannot normalize a zero-norm sample")


def normalize_gram(K) -> np.ndarray:
    """Rescale so every sample has unit norm in feature space."""
    K = np.asarray(K, dtype=np.float64)
    d = np.diag(K).copy()
    _check_diag(d)
    r = 1.0 / np.sqrt(d)
    out = K * r[:, None] * r[None, :]
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


def normalize_cross(K, diag_rows, diag_cols) -> np.ndarray:
    """Normalize a rectangular cross-kernel given both sides' self-similarities."""
    K = np.asarray(K, dtype=np.float64)
    diag_rows = np.asarray(diag_rows, dtype=np.float64)
    diag_cols = np.asarray(diag_cols, dtype=np.float64)
    _check_diag(diag_rows, "row ")
    _check_diag(diag_cols, "column ")
    return K / np.sqrt(diag_rows)[:, None] / np.sqrt(diag_cols)[None, :]


def is_symmetric(K, tol=SYM_TOL) -> bool:
    K = np.asarray(K)
    return bool(np.all(np.abs(K - K.T) <= tol * np.maximum(1.0, np.abs(K))))


def check_psd(K, tol: float = 1e-8, cap: int = PSD_CAP) -> PsdReport:
    """Check ``lambda_min >= -tol * trace(K) / n``.

    Matrices larger than ``cap`` are not factorized; the report then carries
    ``None`` fields and a warning is emitted.
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    if n > cap:
        warnings.warn(f"PSD check skipped for n={n} > {cap}", RuntimeWarning, stacklevel=2)
        return PsdReport(None, None, None)
    lam = float(np.linalg.eigvalsh(0.5 * (K + K.T))[0])
    threshold = -tol * float(np.trace(K)) / n
    return PsdReport(lam >= threshold, lam, threshold)


# -- file formats -----------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_gram(path, K, binary: bool = False, cross: bool = False) -> None:
    """Write a Gram matrix, or with ``cross`` a train x test cross kernel.

    Text: a header line (``n`` for a Gram matrix, ``rows cols`` for a cross
    kernel), then one line of space-separated reals per row. Binary Gram
    files are ``GRAM1`` + little-endian u64 n + n*n doubles (row-major);
    cross kernels use ``GRAMR`` + u64 rows + u64 cols. Cross kernels always
    take the rectangular form, so a square one may be asymmetric.
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2:
        raise KernelError("kernel matrix must be two-dimensional")
    rows, cols = K.shape
    square = rows == cols and not cross
    if square and not is_symmetric(K):
        raise KernelError("Gram matrix is not symmetric; pass cross=True for a cross kernel")
    path = Path(path)
    if binary:
        if square:
            head = BINARY_MAGIC + struct.pack("<Q", rows)
        else:
            head = BINARY_RECT_MAGIC + struct.pack("<QQ", rows, cols)
        path.write_bytes(head + K.astype("<f8").tobytes(order="C"))
        return
    lines = [str(rows) if square else f"{rows} {cols}"]
    lines.extend(" ".join(_fmt(x) for x in row) for row in K)
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def read_gram(path, require_square: bool = True) -> np.ndarray:
    """Read a kernel file written by :func:`write_gram` (format auto-detected).

    Gram files (square header) must be symmetric to ``SYM_TOL``; cross-kernel
    files (``rows cols`` header) are accepted only when ``require_square`` is
    off.
    """
    raw = Path(path).read_bytes()
    if raw.startswith(BINARY_MAGIC):
        off = len(BINARY_MAGIC)
        if len(raw) < off + 8:
            raise KernelError(f"{path}: truncated binary header")
        (n,) = struct.unpack_from("<Q", raw, off)
        rows = cols = n
        gram = True
        off += 8
    elif raw.startswith(BINARY_RECT_MAGIC):
        off = len(BINARY_RECT_MAGIC)
        if len(raw) < off + 16:
            raise KernelError(f"{path}: truncated binary header")
        rows, cols = struct.unpack_from("<QQ", raw, off)
        gram = False
        off += 16
    else:
        K, gram = _parse_text(raw, path)
        rows, cols = K.shape
        off = None
    if off is not None:
        need = off + 8 * rows * cols
        if len(raw) != need:
            raise KernelError(f"{path}: expected {need} bytes, found {len(raw)}")
        K = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=off)
        K = K.astype(np.float64).reshape(rows, cols)
    if gram:
        if not is_symmetric(K):
            raise KernelError(f"{path}: kernel matrix is not symmetric")
    elif require_square:
        raise KernelError(f"{path}: expected a Gram matrix, got a {rows}x{cols} cross kernel")
    return K


def _parse_text(raw: bytes, path) -> np.ndarray:
    try:
        lines = [ln for ln in raw.decode("ascii").splitlines() if ln.strip()]
    except UnicodeDecodeError:
        raise KernelError(f"{path}: not a kernel file") from None
    if not lines:
        raise KernelError(f"{path}: empty kernel file")
    head = lines[0].split()
    try:
        dims = [int(t) for t in head]
    except ValueError:
        raise KernelError(f"{path}: bad header {lines[0]!r}") from None
    if len(dims) == 1:
        rows = cols = dims[0]
    elif len(dims) == 2:
        rows, cols = dims
    else:
        raise KernelError(f"{path}: bad header {lines[0]!r}")
    if len(lines) - 1 != rows:
        raise KernelError(f"{path}: expected {rows} rows, found {len(lines) - 1}")
    K = np.empty((rows, cols))
    for i, ln in enumerate(lines[1:]):
        toks = ln.split()
        if len(toks) != cols:
            raise KernelError(f"{path}: row {i} has {len(toks)} entries, expected {cols}")
        try:
            K[i] = [float(t) for t in toks]
        except ValueError:
            raise KernelError(f"{path}: non-numeric entry in row {i}") from None
    return K, len(dims) == 1


def read_labels(path) -> np.ndarray:
    """One label per line, each -1 or +1."""
    text = Path(path).read_text(encoding="ascii")
    try:
        y = np.array([float(t) for t in text.split()])
    except ValueError:
        raise KernelError(f"{path}: labels must be numeric") from None
    if y.size == 0:
        raise KernelError(f"{path}: no labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise KernelError(f"{path}: labels must be -1 or +1")
    return y


def write_labels(path, y) -> None:
    Path(path).write_text("".join(f"{int(v):+d}\n" for v in y), encoding="ascii")
