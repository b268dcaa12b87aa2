import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockmkl.kernels import KernelSet
from blockmkl.model import (CrossKernelSet, ModelFormatError, ModelVersionError, TrainedModel,
                            accuracy, auc, dumps_model, evaluate_scores, load_model, loads_model,
                            partial_auc, predict_scores, roc_curve, save_model)
from blockmkl.objective import MklConfig
from blockmkl.pipeline import train
from blockmkl.weights import KernelWeights

from oracles import auc_pairs, feature_instance


def two_point_model():
    X = np.array([[1.0, 0.0], [-1.0, 0.0]])
    model, _ = train(KernelSet.from_list([X @ X.T]), np.array([1.0, -1.0]), MklConfig(p=2, mu=0))
    return model, X


def random_model(rng, n=6, M=3):
    return TrainedModel(rng.normal(size=n), KernelWeights(rng.uniform(0, 2, M)),
                        MklConfig(p=4 / 3, mu=0.1), [f"k{m}" for m in range(M)], n)


# ---------------------------------------------------------------- scoring

def test_two_point_score():
    model, X = two_point_model()
    np.testing.assert_allclose(model.theta.effective, [1.0], atol=1e-12)
    np.testing.assert_allclose(model.v, [0.5, -0.5], atol=1e-6)
    x = np.array([[1.0, 0.0]])
    assert predict_scores(model, [X @ x.T])[0] == pytest.approx(1.0, abs=1e-6)


def test_zero_expansion_scores_zero():
    rng = np.random.default_rng(0)
    m = random_model(rng)
    m0 = TrainedModel(np.zeros(6), m.theta, m.config, m.kernel_names, 6)
    np.testing.assert_array_equal(predict_scores(m0, rng.normal(size=(3, 6, 4))), 0.0)


def test_single_active_kernel_reduces_to_that_kernel():
    rng = np.random.default_rng(1)
    cross = rng.normal(size=(3, 6, 5))
    v = rng.normal(size=6)
    m = TrainedModel(v, KernelWeights(np.array([0.0, 2.5, 0.0])), MklConfig(), ("a", "b", "c"), 6)
    np.testing.assert_allclose(predict_scores(m, cross), 2.5 * v @ cross[1], rtol=1e-13)


def test_prediction_linear_in_v_and_theta():
    rng = np.random.default_rng(2)
    cross = CrossKernelSet(rng.normal(size=(3, 6, 4)))
    v1, v2, t1, t2 = rng.normal(size=6), rng.normal(size=6), rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)
    a, b = 0.7, 1.9

    def score(v, t):
        return predict_scores(TrainedModel(v, KernelWeights(t), MklConfig(), ("a", "b", "c"), 6), cross)

    np.testing.assert_allclose(score(a * v1 + b * v2, t1), a * score(v1, t1) + b * score(v2, t1), atol=1e-12)
    np.testing.assert_allclose(score(v1, a * t1 + b * t2), a * score(v1, t1) + b * score(v1, t2), atol=1e-12)


def test_score_oracle_loop():
    rng = np.random.default_rng(3)
    m = random_model(rng)
    cross = rng.normal(size=(3, 6, 4))
    th = m.theta.effective
    expect = [sum(th[k] * sum(m.v[i] * cross[k, i, j] for i in range(6)) for k in range(3)) for j in range(4)]
    np.testing.assert_allclose(predict_scores(m, cross), expect, rtol=1e-12)


def test_shape_errors():
    rng = np.random.default_rng(4)
    m = random_model(rng)
    with pytest.raises(ValueError):
        predict_scores(m, rng.normal(size=(2, 6, 4)))
    with pytest.raises(ValueError):
        predict_scores(m, rng.normal(size=(3, 5, 4)))
    with pytest.raises(ValueError):
        CrossKernelSet.from_list([np.ones((2, 3)), np.ones((2, 2))])


@pytest.mark.parametrize("p, mu", [(4 / 3, 0.0), (2.0, 0.0), (64 / 63, 0.5), (4.0, 0.1)])
def test_training_set_self_consistency(p, mu):
    rng = np.random.default_rng(5)
    _, grams, y = feature_instance(rng, 25, 3)
    ks = KernelSet.from_list(grams)
    model, sol = train(ks, y, MklConfig(p=p, mu=mu))
    z = sol.point.alpha * y
    th = model.theta.effective
    f_internal = sum(th[m] * (grams[m] @ z) for m in range(3))
    np.testing.assert_allclose(predict_scores(model, ks.matrices), f_internal, atol=1e-10)


# ---------------------------------------------------------------- metrics

def test_accuracy_examples():
    y = np.array([1, -1, 1, -1])
    assert accuracy([2, -1, 0.5, -3], y) == 1.0
    assert accuracy([-2, 1, -0.5, 3], y) == 0.0
    assert accuracy([2, 1, -0.5, -3], y) == 0.5
    assert accuracy([0.0, 0.0], [1, -1]) == 0.5


def test_accuracy_length_mismatch():
    with pytest.raises(ValueError):
        accuracy([1, 2], [1])


def test_auc_examples():
    assert auc([0.9, 0.8, 0.7, 0.1], [1, -1, 1, -1]) == 0.75
    assert auc_pairs([0.9, 0.8, 0.7, 0.1], [1, -1, 1, -1]) == 0.75
    assert auc([3, 2, 1, 0], [1, 1, -1, -1]) == 1.0
    assert auc([0, 1, 2, 3], [1, 1, -1, -1]) == 0.0
    assert partial_auc([3, 2, 1, 0], [1, 1, -1, -1], 0.1) == 1.0
    assert auc([1, 1], [1, -1]) == 0.5


def test_auc_single_class():
    with pytest.raises(ValueError):
        auc([1, 2, 3], [1, 1, 1])
    with pytest.raises(ValueError):
        partial_auc([1, 2], [-1, -1])


scores_labels = st.integers(2, 40).flatmap(lambda n: st.tuples(
    st.lists(st.integers(-5, 5).map(float), min_size=n, max_size=n),
    st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n)).filter(
        lambda t: 0 < t[1].count(1) < n))


@settings(max_examples=100, deadline=None)
@given(scores_labels)
def test_auc_matches_pair_counting(sl):
    s, y = sl
    assert auc(s, y) == pytest.approx(auc_pairs(s, y), abs=1e-12)
    fpr, tpr = roc_curve(s, y)
    assert partial_auc(s, y, 1.0) == pytest.approx(auc_pairs(s, y), abs=1e-12)
    assert fpr[-1] == 1.0 and tpr[-1] == 1.0


@settings(max_examples=60, deadline=None)
@given(scores_labels)
def test_auc_monotone_invariance(sl):
    s, y = sl
    s = np.array(s)
    for f in (np.exp, lambda t: 3 * t + 7, lambda t: t ** 3):
        assert auc(f(s), y) == auc(s, y)
        assert partial_auc(f(s), y, 0.3) == pytest.approx(partial_auc(s, y, 0.3), abs=1e-12)


def pauc_oracle(s, y, fpr_max, grid=20001):
    """Integrate the ROC step/diagonal curve on a dense FPR grid."""
    s, y = np.asarray(s, float), np.asarray(y)
    pos, neg = s[y > 0], s[y < 0]
    xs = np.linspace(0, fpr_max, grid)
    # at FPR x the threshold sits on the floor(x*N)-th highest negative (0-based)
    neg_sorted = np.sort(neg)[::-1]
    N = neg.size
    tpr = np.empty_like(xs)
    for k, x in enumerate(xs):
        j = min(int(np.floor(x * N)), N - 1)
        t = neg_sorted[j]
        frac = x * N - j
        above = np.mean(pos > t)
        tied = np.mean(pos == t)
        # fraction of the tied block of negatives already passed
        n_tied = np.sum(neg == t)
        first = np.argmax(neg_sorted == t)
        w = (j - first + frac) / n_tied
        tpr[k] = above + w * tied
    return np.trapezoid(tpr, xs) / fpr_max


@pytest.mark.parametrize("seed", range(5))
def test_partial_auc_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 30
    y = np.where(rng.random(n) < 0.5, 1, -1)
    y[:2] = [1, -1]
    s = np.round(rng.normal(size=n) + 0.8 * y, 1)
    for fmax in (0.1, 0.35, 1.0):
        assert partial_auc(s, y, fmax) == pytest.approx(pauc_oracle(s, y, fmax), abs=1e-5)


def test_partial_auc_bad_fpr():
    with pytest.raises(ValueError):
        partial_auc([1, 0], [1, -1], 0.0)
    with pytest.raises(ValueError):
        partial_auc([1, 0], [1, -1], 1.5)


def test_evaluate_scores_keys():
    out = evaluate_scores([0.9, 0.8, 0.7, 0.1], [1, -1, 1, -1])
    assert out == {"accuracy": 0.5, "auc": 0.75, "pauc@0.1": partial_auc([0.9, 0.8, 0.7, 0.1], [1, -1, 1, -1])}


# ---------------------------------------------------------------- model file

def test_round_trip_two_point(tmp_path):
    model, _ = two_point_model()
    path = tmp_path / "m.txt"
    save_model(model, path)
    back = load_model(path)
    assert back == model
    assert path.read_text().splitlines()[0] == "MKLMODEL 1"


@pytest.mark.parametrize("seed", range(10))
def test_round_trip_bit_exact(tmp_path, seed):
    rng = np.random.default_rng(seed)
    m = TrainedModel(rng.normal(size=7) * 10.0 ** rng.integers(-300, 300, 7),
                     KernelWeights(rng.uniform(0, 1, 2) / 3), MklConfig(p=float(rng.uniform(1.1, 60)),
                                                                        mu=float(rng.uniform(0, 3)), c=0.1 / 3),
                     ("a", "b"), 7, {"converged": True, "iterations": 12, "objective": 1 / 7})
    save_model(m, tmp_path / "m")
    back = load_model(tmp_path / "m")
    assert back == m
    assert back.v.tobytes() == m.v.tobytes()
    assert back.config.p == m.config.p and back.config.c == m.config.c


def test_required_line_order():
    model, _ = two_point_model()
    keys = [line.split()[0] for line in dumps_model(model).splitlines()]
    assert keys[:10] == ["MKLMODEL", "p", "mu", "c", "loss", "n", "M", "theta", "v", "names"]


def test_truncated_file_reports_offset():
    text = dumps_model(two_point_model()[0])
    cut = text[:text.index("\nv ") + 1]
    with pytest.raises(ModelFormatError) as info:
        loads_model(cut)
    assert info.value.offset == len(cut.encode())
    assert "byte offset" in str(info.value)


def test_bad_line_offset():
    text = dumps_model(two_point_model()[0]).replace("\nloss hinge", "\nloss_x hinge")
    with pytest.raises(ModelFormatError) as info:
        loads_model(text)
    assert info.value.offset == text.index("loss_x")


def test_version_error():
    text = dumps_model(two_point_model()[0]).replace("MKLMODEL 1", "MKLMODEL 7", 1)
    with pytest.raises(ModelVersionError, match="7"):
        loads_model(text)


@pytest.mark.parametrize("mutate", [
    lambda t: "",
    lambda t: t.replace("MKLMODEL", "NOTAMODEL", 1),
    lambda t: t.replace("\nn 2", "\nn 3"),
    lambda t: t.replace("\nM 1", "\nM 2"),
    lambda t: t.replace("\np ", "\np x"),
    lambda t: t + "bogus 1\n",
])
def test_malformed_files(mutate):
    with pytest.raises(ModelFormatError):
        loads_model(mutate(dumps_model(two_point_model()[0])))


def test_non_ascii_file(tmp_path):
    path = tmp_path / "m"
    path.write_bytes(b"MKLMODEL 1\np \xff\n")
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_model_invariants():
    with pytest.raises(ValueError):
        TrainedModel(np.ones(3), KernelWeights(np.ones(2)), MklConfig(), ("a", "b"), 4)
    with pytest.raises(ValueError):
        TrainedModel(np.ones(3), KernelWeights(np.ones(2)), MklConfig(), ("a",), 3)
    with pytest.raises(ValueError):
        TrainedModel(np.ones(3), KernelWeights(np.ones(1)), MklConfig(), ("a b",), 3)
