import math

import numpy as np
import pytest

from blockmkl.bounds import (BoundParams, format_report, generalization_bound,
                             literature_consistency_report, norm_factor, rademacher_bound)

from oracles import generalization_mp, rademacher_mp


# ---------------------------------------------------------------- examples

@pytest.mark.parametrize("n", [1, 7, 100, 10_000])
@pytest.mark.parametrize("p, q", [(1.0, 1.0), (4 / 3, 2.0), (2.0, 2.0), (64.0, 3.0)])
def test_single_kernel(n, p, q):
    assert rademacher_bound(BoundParams(M=1, n=n, p=p, q=q, c1=0.3, c2=0.7)) == pytest.approx(
        1 / math.sqrt(n), rel=1e-15)


def test_l1_sixteen_kernels():
    r = rademacher_bound(BoundParams(M=16, n=100, p=1.0, c1=1.0, c2=0.0))
    assert r == pytest.approx(math.sqrt(2 * math.log(16) / 100) + 0.1, abs=1e-15)
    assert r == pytest.approx(0.335482, abs=1e-6)


@pytest.mark.parametrize("c1", [0.0, 0.4, 1.0])
def test_sharpened_case(c1):
    r = rademacher_bound(BoundParams(M=4, n=100, p=2.0, q=2.0, c1=c1, c2=1 - c1))
    assert r == pytest.approx(0.2, abs=1e-15)


def test_generalization_examples():
    n = 80
    delta = 2 * math.exp(-n / 8)
    assert generalization_bound(BoundParams(M=2, n=n, delta=delta), 0.0) == pytest.approx(1.0, abs=1e-12)
    g = generalization_bound(BoundParams(M=2, n=100, delta=0.05, emp_risk=0.1), 0.2)
    assert g == pytest.approx(0.1 + 0.4 + math.sqrt(8 * math.log(40) / 100), abs=1e-15)
    assert g == pytest.approx(1.0432, abs=1e-4)
    g1 = generalization_bound(BoundParams(M=2, n=50, delta=1 - 1e-12), 0.0)
    assert g1 == pytest.approx(math.sqrt(8 * math.log(2) / 50), rel=1e-9)


# ---------------------------------------------------------------- arbitrary precision oracle

def param_grid():
    rng = np.random.default_rng(0)
    for _ in range(200):
        c1 = float(rng.choice([0.0, 1.0, rng.uniform()]))
        yield BoundParams(M=int(rng.integers(1, 500)), n=int(rng.integers(1, 10**6)),
                          p=float(rng.choice([1.0, 4 / 3, 2.0, rng.uniform(1, 10)])),
                          q=float(rng.choice([1.0, 2.0, rng.uniform(1, 10)])), c1=c1, c2=1 - c1,
                          lipschitz=float(rng.uniform(0.1, 3)), delta=float(rng.uniform(1e-6, 0.99)),
                          emp_risk=float(rng.uniform(0, 1)))


def test_matches_mpmath_oracle():
    for pr in param_grid():
        for sharpen in (True, False):
            r = rademacher_bound(pr, sharpen=sharpen)
            ref = rademacher_mp(pr.M, pr.n, pr.p, pr.q, pr.c1, pr.c2, sharpen=sharpen)
            assert abs(r - float(ref)) <= 1e-12 * max(1.0, abs(float(ref)))
            g = generalization_bound(pr, r)
            gref = generalization_mp(pr.emp_risk, pr.lipschitz, r, pr.n, pr.delta)
            assert abs(g - float(gref)) <= 1e-12 * max(1.0, abs(float(gref)))


# ---------------------------------------------------------------- scaling claims

MS = (4, 16, 64)


def test_l1_scales_as_sqrt_log_m():
    n = 1000
    vals = {M: rademacher_bound(BoundParams(M=M, n=n, p=1.0)) for M in MS}
    for a, b in zip(MS, MS[1:]):
        predicted = (math.sqrt(2 * math.log(b) / n) + math.sqrt(1 / n)) / (
            math.sqrt(2 * math.log(a) / n) + math.sqrt(1 / n))
        assert vals[b] / vals[a] == pytest.approx(predicted, rel=0.05)
        # the leading sqrt(ln M) term dominates: the ratio sits near sqrt(ln b / ln a)
        assert vals[b] / vals[a] < math.sqrt(math.log(b) / math.log(a))


def test_l43_scales_as_quarter_power():
    n = 1000
    vals = {M: rademacher_bound(BoundParams(M=M, n=n, p=4 / 3, q=4 / 3)) for M in MS}
    for a, b in zip(MS, MS[1:]):
        predicted = (b / a) ** 0.25 * (math.sqrt(2 * math.log(b)) + 1) / (math.sqrt(2 * math.log(a)) + 1)
        assert vals[b] / vals[a] == pytest.approx(predicted, rel=0.05)
    assert vals[16] / rademacher_bound(BoundParams(M=1, n=n, p=4 / 3)) == pytest.approx(
        2 * (math.sqrt(2 * math.log(16)) + 1), rel=1e-12)


@pytest.mark.parametrize("M", [2, 4, 16, 64, 256])
def test_elastic_net_grid(M):
    n = 500
    rows = {r.name: r for r in literature_consistency_report(M, n, c1_grid=np.linspace(1, 0, 21))}
    en = [r for name, r in rows.items() if name.startswith("elastic_net")]
    assert en[0].c1 == 1.0 and en[0].rademacher == rows["l1"].rademacher
    assert en[-1].c1 == 0.0 and en[-1].rademacher == pytest.approx(rows["l2"].rademacher, rel=1e-15)
    values = [r.rademacher for r in en]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert max(values) / en[0].rademacher <= math.sqrt(M) * (1 + 1e-12)
    assert values[-1] / values[0] == pytest.approx(math.sqrt(M), rel=1e-12)


def test_report_rows_and_format():
    rows = literature_consistency_report(8, 200)
    names = [r.name for r in rows]
    assert names[:4] == ["l1", "l4/3", "l2", "l2_sharp"]
    assert rows[3].rademacher == pytest.approx(math.sqrt(8) / math.sqrt(200), rel=1e-15)
    text = format_report(rows)
    assert text.splitlines()[0].split() == ["setting", "p", "q", "c1", "c2", "rademacher", "generalization"]
    csv = format_report(rows, csv=True).splitlines()
    assert len(csv) == len(rows) + 1 and csv[1].startswith("l1,1,1,1,0,")
    with pytest.raises(ValueError):
        literature_consistency_report(1, 10)


# ---------------------------------------------------------------- invariants

def test_nonincreasing_in_n():
    for pr in list(param_grid())[:50]:
        prev = math.inf
        for n in (1, 2, 10, 100, 10**4, 10**6):
            r = rademacher_bound(pr.replace(n=n))
            g = generalization_bound(pr.replace(n=n), r)
            assert r <= prev
            prev = r
            assert g >= 0


def test_swap_symmetry():
    for pr in param_grid():
        swapped = pr.replace(p=pr.q, q=pr.p, c1=pr.c2, c2=pr.c1)
        assert rademacher_bound(swapped) == pytest.approx(rademacher_bound(pr), rel=1e-14)


def test_equal_exponents_ignore_mixing():
    for p in (1.0, 1.5, 2.0, 7.0):
        vals = [rademacher_bound(BoundParams(M=12, n=40, p=p, q=p, c1=c, c2=1 - c))
                for c in np.linspace(0, 1, 11)]
        np.testing.assert_allclose(vals, vals[0], rtol=1e-14)


def test_sharpened_never_exceeds_general():
    for M in (1, 2, 5, 50):
        for p in (2.0, 3.0, 10.0):
            for q in (2.0, 4.0):
                pr = BoundParams(M=M, n=77, p=p, q=q, c1=0.3, c2=0.7)
                assert rademacher_bound(pr) <= rademacher_bound(pr, sharpen=False)


def test_norm_factor():
    assert norm_factor(16, 1.0, 2.0, 1.0, 0.0) == 1.0
    assert norm_factor(16, 1.0, 2.0, 0.0, 1.0) == 4.0


@pytest.mark.parametrize("kw", [
    dict(M=0, n=1), dict(M=1, n=0), dict(M=1, n=1, p=0.5), dict(M=1, n=1, c1=0.5, c2=0.4),
    dict(M=1, n=1, c1=-0.5, c2=1.5), dict(M=1, n=1, lipschitz=0), dict(M=1, n=1, delta=1.0),
    dict(M=1, n=1, emp_risk=-0.1),
])
def test_param_validation(kw):
    with pytest.raises(ValueError):
        BoundParams(**kw)


def test_negative_rademacher_rejected():
    with pytest.raises(ValueError):
        generalization_bound(BoundParams(M=2, n=10), -0.1)
