"""Select the compiled core or the pure-Python fallback at import.

Set ``BLOCKMKL_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("BLOCKMKL_PURE_PYTHON", "") not in ("", "0"):
    from . import _fallback as _impl
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        from . import _fallback as _impl
        BACKEND = "python"

sq_dists = _impl.sq_dists
sparse_count_gram = _impl.sparse_count_gram

# BLAS gemv beats the hand loop in _core (see benchmarks/bench_core.py),
# so both backends route the solver's quadratic forms through numpy.
from ._fallback import quad_forms  # noqa: E402

__all__ = ["BACKEND", "quad_forms", "sq_dists", "sparse_count_gram"]
