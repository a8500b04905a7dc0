import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evhats.classifier import (
    DimensionMismatch, EmptyInput, LengthMismatch, LinearModel, SingleClassInput, TrainTrace, accuracy,
    decision_scores, load_model, predict, roc_auc, save_model, train_linear_svm,
)


def pairwise_auc(scores, labels):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    diff = pos[:, None] - neg[None, :]
    return ((diff > 0).sum() + 0.5 * (diff == 0).sum()) / (len(pos) * len(neg))


def blobs(rng, n=200, d=5):
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    y = np.repeat([0, 1], n // 2)
    X = rng.normal(size=(n, d)) + np.where(y[:, None] == 1, 4.0, -4.0) * direction
    return X, y


def perceptron_separates(X, y, epochs=1000):
    Xb = np.c_[X, np.ones(len(X))]
    s = np.where(y == 1, 1.0, -1.0)
    w = np.zeros(Xb.shape[1])
    for _ in range(epochs):
        mistakes = 0
        for xi, si in zip(Xb, s):
            if si * (xi @ w) <= 0:
                w += si * xi
                mistakes += 1
        if mistakes == 0:
            return True
    return False


def test_separable_pair():
    m = train_linear_svm([[-1.0], [1.0]], [0, 1])
    assert predict(m, [[-1.0], [1.0]]).tolist() == [0, 1]


def test_determinism(rng):
    X, y = blobs(rng)
    a = train_linear_svm(X, y, seed=3)
    b = train_linear_svm(X, y, seed=3)
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)
    c = train_linear_svm(X, y, seed=4)
    assert not np.array_equal(a.weights, c.weights)


def test_blobs_training_accuracy(rng):
    X, y = blobs(rng)
    assert perceptron_separates(X, y)
    m = train_linear_svm(X, y)
    assert accuracy(predict(m, X), y) >= 0.99


def test_multiclass_one_vs_rest(rng):
    centers = np.array([[8, 0], [-8, 0], [0, 8]])
    y = np.repeat([0, 1, 2], 50)
    X = centers[y] + rng.normal(size=(150, 2))
    m = train_linear_svm(X, y)
    assert m.weights.shape == (3, 2)
    assert accuracy(predict(m, X), y) >= 0.99


def test_training_errors():
    with pytest.raises(SingleClassInput):
        train_linear_svm([[1.0], [2.0]], [1, 1])
    with pytest.raises(DimensionMismatch):
        train_linear_svm([[1.0], [2.0]], [0, 1, 1])
    m = train_linear_svm([[-1.0], [1.0]], [0, 1])
    with pytest.raises(DimensionMismatch):
        decision_scores(m, [[1.0, 2.0]])


def test_scores_hand_cases():
    zero = LinearModel(np.zeros((1, 2)), [0.0], [0, 1])
    assert decision_scores(zero, [[3.0, 4.0]]).tolist() == [0.0]
    assert predict(zero, [[3.0, 4.0]]).tolist() == [0]
    m = LinearModel([[1.0, 0.0]], [-0.5], [0, 1])
    assert decision_scores(m, [[1.0, 0.0]]).tolist() == [0.5]
    assert predict(m, [[1.0, 0.0]]).tolist() == [1]


def test_multiclass_tie_goes_to_lower_index():
    m = LinearModel(np.zeros((3, 1)), np.zeros(3), ["a", "b", "c"])
    assert predict(m, [[1.0]]).tolist() == ["a"]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 100), st.floats(-5, 5))
def test_argmax_scale_and_shift_invariance(seed, c, shift):
    rng = np.random.default_rng(seed)
    W, b = rng.normal(size=(4, 6)), rng.normal(size=4)
    X = rng.normal(size=(30, 6))
    base = predict(LinearModel(W, b, [0, 1, 2, 3]), X)
    assert np.array_equal(predict(LinearModel(c * W, c * b, [0, 1, 2, 3]), c * X / c), base)
    scaled = LinearModel(W, b, [0, 1, 2, 3])
    scores = decision_scores(scaled, X)
    assert np.array_equal(np.argmax(c * scores + shift, axis=1), np.argmax(scores, axis=1))
    # scaling features and weights together scales scores by c**2
    bm = LinearModel(W[:1], b[:1], [0, 1])
    bm2 = LinearModel(c * W[:1], c * c * b[:1], [0, 1])
    assert np.array_equal(predict(bm2, c * X), predict(bm, X))


def test_accuracy_cases(rng):
    assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert accuracy([1, 0, 1, 1], [1, 0, 1, 0]) == 0.75
    with pytest.raises(EmptyInput):
        accuracy([], [])
    with pytest.raises(LengthMismatch):
        accuracy([1], [1, 2])
    for _ in range(20):
        a, b = rng.integers(0, 3, 50), rng.integers(0, 3, 50)
        hits = 0
        for i in range(50):
            if a[i] == b[i]:
                hits += 1
        assert accuracy(a, b) == hits / 50
        p, t = rng.integers(0, 2, 40), rng.integers(0, 2, 40)
        assert accuracy(p, t) == pytest.approx(1 - accuracy(p, 1 - t))


def test_auc_hand_cases():
    assert roc_auc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]).auc == 1.0
    assert roc_auc([0.9, 0.6, 0.4, 0.1], [1, 0, 1, 0]).auc == pytest.approx(0.75, abs=1e-12)
    assert roc_auc([0.5, 0.5], [1, 0]).auc == pytest.approx(0.5)
    with pytest.raises(SingleClassInput):
        roc_auc([0.1, 0.2], [1, 1])


def test_auc_matches_pairwise_small(rng):
    for _ in range(100):
        n = int(rng.integers(2, 51))
        labels = rng.integers(0, 2, n)
        labels[:2] = [0, 1]
        scores = np.round(rng.normal(size=n), 1)
        roc = roc_auc(scores, labels)
        assert roc.auc == pytest.approx(pairwise_auc(scores, labels), abs=1e-9)
        assert roc.fpr[0] == 0 and roc.tpr[-1] == 1 and roc.fpr[-1] == 1
        assert (np.diff(roc.fpr) >= 0).all() and (np.diff(roc.tpr) >= 0).all()


def test_objective_non_increasing(rng):
    X, y = blobs(rng, d=8)
    X += rng.normal(scale=2.0, size=X.shape)   # overlapping classes
    trace = TrainTrace([])
    train_linear_svm(X, y, lam=1e-2, epochs=30, trace=trace)
    curve = np.array(trace.objectives[0])
    assert (np.diff(curve) <= 1e-6).all()


def test_standardize_roundtrip(tmp_path, rng):
    X, y = blobs(rng)
    X = X * 1000 + 5
    m = train_linear_svm(X, y, standardize=True, fingerprint="abc")
    assert accuracy(predict(m, X), y) >= 0.99
    save_model(m, tmp_path / "m.txt")
    m2 = load_model(tmp_path / "m.txt")
    assert np.array_equal(m.weights, m2.weights) and np.array_equal(m.bias, m2.bias)
    assert np.array_equal(m.mean, m2.mean) and np.array_equal(m.scale, m2.scale)
    assert m2.classes == m.classes and m2.hyper == m.hyper and m2.fingerprint == "abc"


def test_model_file_exact_roundtrip(tmp_path, rng):
    m = LinearModel(rng.normal(size=(3, 5)) * 10.0 ** rng.integers(-300, 300, (3, 5)),
                    rng.normal(size=3), ["x", "y", "z"])
    save_model(m, tmp_path / "m.txt")
    text = (tmp_path / "m.txt").read_text()
    assert text.startswith("schema = evhats-linear-model/1")
    m2 = load_model(tmp_path / "m.txt")
    assert np.array_equal(m.weights, m2.weights) and m2.classes == ["x", "y", "z"]
