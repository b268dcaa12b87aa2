"""Compiled core vs. pure-Python fallback on the hot kernels.

    python3 benchmarks/bench_core.py [--sizes 50 200 500] [--repeat 5]

Each routine is first checked for agreement between the two backends, then
timed (best of ``--repeat``). The spectrum kernel is where the compiled merge
loop pays off; the quadratic forms are BLAS-bound either way, which is why the
package routes them through numpy regardless of backend.
"""
from __future__ import annotations

import argparse
import string
import sys
import timeit

import numpy as np

from blockmkl import _fallback
from blockmkl.kernels import _count_table

try:
    from blockmkl import _core
except ImportError:  # extension not built
    _core = None


def _strings(rng, n, length=60, alphabet=string.ascii_lowercase[:4]):
    letters = np.array(list(alphabet))
    return ["".join(rng.choice(letters, size=length)) for _ in range(n)]


def cases(n, rng):
    X = rng.normal(size=(n, 20))
    stack = np.ascontiguousarray(np.stack([X[:, i::3] @ X[:, i::3].T for i in range(3)]))
    v = rng.normal(size=n)
    table = _count_table(_strings(rng, n), 3, {})
    return {
        "quad_forms": (stack, v),
        "sq_dists": (X, X, True),
        "spectrum_gram": (*table, *table, True),
    }


FUNCS = {"quad_forms": "quad_forms", "sq_dists": "sq_dists", "spectrum_gram": "sparse_count_gram"}


def best_time(fn, args, repeat):
    number = 1
    # grow the inner loop until one batch takes ~20 ms
    while True:
        t = timeit.timeit(lambda: fn(*args), number=number)
        if t > 0.02 or number >= 1 << 16:
            break
        number *= 4
    times = timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)
    return min(times) / number


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-12)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 200, 500])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled extension not available; build with "
              "`pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'routine':<15}{'n':>6}{'compiled_ms':>14}{'python_ms':>12}{'speedup':>10}")
    for n in args.sizes:
        for name, case in cases(n, rng).items():
            fc = getattr(_core, FUNCS[name])
            fp = getattr(_fallback, FUNCS[name])
            if not _same(fc(*case), fp(*case)):
                print(f"{name}: backends disagree at n={n}", file=sys.stderr)
                return 2
            tc = best_time(fc, case, args.repeat)
            tp = best_time(fp, case, args.repeat)
            print(f"{name:<15}{n:>6}{tc * 1e3:>14.4f}{tp * 1e3:>12.4f}{tp / tc:>10.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
