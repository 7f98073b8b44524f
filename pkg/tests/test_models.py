import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from petbench.data import encode
from petbench.models import (
    KNN, AccuracyReport, DegenerateLabelsError, LogisticRegression, ModelSpec, NeuralNetwork,
    accuracy, predict, train,
)

from oracles import gradient_check_batch, numeric_gradient, relative_error


# --- specs -----------------------------------------------------------------------

def test_spec_defaults():
    assert ModelSpec("knn").knn_k == 5
    nn = ModelSpec("nn")
    assert (nn.hidden, nn.n_epochs, nn.batch_size, nn.lr) == ((32,), 50, 32, 0.01)


@pytest.mark.parametrize("bad", [
    dict(kind="svm"), dict(kind="knn", knn_k=0), dict(kind="nn", epochs=0),
    dict(kind="logreg", learning_rate=0.0), dict(kind="nn", hidden=(0,)),
])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        ModelSpec(**bad)


def test_spec_from_dict_and_seed():
    spec = ModelSpec.from_dict({"kind": "nn", "hidden": [8, 4], "seed": 1})
    assert spec.hidden == (8, 4)
    assert spec.with_seed(9).seed == 9 and spec.with_seed(9).hidden == (8, 4)


# --- training / prediction -----------------------------------------------------------

def test_logreg_separable_pair():
    X, y = np.array([[0.0], [1.0]]), np.array([0, 1])
    model = train(ModelSpec("logreg"), X, y)
    assert accuracy(predict(model, X), y) == 1.0


def test_knn_one_neighbour_self_accuracy():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 2, 40)
    y[:2] = [0, 1]
    assert accuracy(predict(train(ModelSpec("knn", knn_k=1), X, y), X), y) == 1.0


def test_knn_point_on_training_point():
    X = np.array([[0.0, 0.0], [5.0, 5.0]])
    model = KNN(1).fit(X, np.array([1, 0]))
    assert predict(model, np.array([[5.0, 5.0]])).tolist() == [0]


def test_knn_vote_tie_goes_to_smaller_label():
    X = np.array([[0.0], [1.0], [-1.0], [3.0]])
    model = KNN(2).fit(X, np.array([1, 0, 1, 0]))
    # neighbours of 0.5 at equal distance: rows 0 (label 1) and 1 (label 0)
    assert predict(model, np.array([[0.5]])).tolist() == [0]


def test_knn_distance_tie_goes_to_lower_training_index():
    X = np.array([[1.0], [-1.0], [3.0]])
    model = KNN(1).fit(X, np.array([1, 0, 0]))
    assert predict(model, np.array([[0.0]])).tolist() == [1]


def test_zero_weight_logreg_predicts_zero():
    m = LogisticRegression().init(3)
    assert m.predict_proba(np.ones((2, 3))).tolist() == [0.5, 0.5]
    assert predict(m, np.ones((2, 3))).tolist() == [0, 0]


def test_empty_test_set():
    m = train(ModelSpec("knn"), np.eye(2), np.array([0, 1]))
    assert predict(m, np.zeros((0, 2))).shape == (0,)


@pytest.mark.parametrize("kind", ["knn", "logreg", "nn"])
def test_shape_mismatch(kind):
    m = train(ModelSpec(kind, epochs=1), np.eye(2), np.array([0, 1]))
    with pytest.raises(ValueError):
        predict(m, np.zeros((1, 3)))


@pytest.mark.parametrize("kind", ["knn", "logreg", "nn"])
def test_single_class_rejected(kind):
    with pytest.raises(DegenerateLabelsError):
        train(ModelSpec(kind), np.eye(3), np.array([1, 1, 1]))


def test_nn_learns_xor():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 25, dtype=float)
    y = (X[:, 0] != X[:, 1]).astype(int)
    m = train(ModelSpec("nn", hidden=(16,), learning_rate=0.5, epochs=300, batch_size=8, seed=1), X, y)
    assert accuracy(predict(m, X), y) == 1.0


@pytest.mark.parametrize("kind", ["logreg", "nn"])
def test_seeded_training_is_bit_reproducible(kind):
    rng = np.random.default_rng(3)
    X, y = rng.normal(size=(50, 4)), rng.integers(0, 2, 50)
    spec = ModelSpec(kind, epochs=5, seed=11)
    a, b = train(spec, X, y), train(spec, X, y)
    assert np.array_equal(a.predict_proba(X), b.predict_proba(X))


# --- accuracy ----------------------------------------------------------------------

def test_accuracy_examples():
    assert accuracy([1, 0, 1], [1, 0, 1]) == 1.0
    assert accuracy([1, 1, 0, 0], [1, 0, 1, 0]) == 0.5


@pytest.mark.parametrize("pred, actual", [([1], [1, 0]), ([], [])])
def test_accuracy_errors(pred, actual):
    with pytest.raises(ValueError):
        accuracy(pred, actual)


labels = arrays(np.int64, st.integers(1, 50), elements=st.integers(0, 1))


@given(labels, st.data())
def test_accuracy_range_and_relabel_invariance(pred, data):
    actual = data.draw(arrays(np.int64, pred.shape, elements=st.integers(0, 1)))
    acc = accuracy(pred, actual)
    assert 0.0 <= acc <= 1.0
    assert acc == int((pred == actual).sum()) / len(pred)
    assert accuracy(1 - pred, 1 - actual) == acc


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_knn_invariant_to_training_row_order(seed, k):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(30, 2)), rng.integers(0, 2, 30)
    y[:2] = [0, 1]
    Q = rng.normal(size=(10, 2))
    perm = rng.permutation(30)
    assert np.array_equal(predict(KNN(k).fit(X, y), Q), predict(KNN(k).fit(X[perm], y[perm]), Q))


# --- gradients ---------------------------------------------------------------------

@pytest.mark.parametrize("kind", ["logreg", "nn"])
def test_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(17)
    assert max(gradient_check_batch(kind, rng) for _ in range(25)) < 1e-4


def test_nn_gradient_five_sample_batch():
    rng = np.random.default_rng(5)
    X, y = rng.normal(size=(5, 4)), np.array([0, 1, 1, 0, 1], dtype=float)
    m = NeuralNetwork(hidden=(32,), seed=0).init(4)
    _, grads = m.loss_and_grad(X, y)
    W, _ = m.params[0]
    assert relative_error(grads[0][0], numeric_gradient(lambda: m.loss_and_grad(X, y)[0], W)) < 1e-4


def test_accuracy_report_mean():
    r = AccuracyReport(ModelSpec("knn"), "benchmark", [0.8, 0.9])
    assert r.mean == pytest.approx(0.85)


@pytest.mark.slow
def test_logreg_loss_non_increasing_on_adult(adult_split):
    train_set, _ = adult_split
    X, y = encode(train_set)[0]
    m = LogisticRegression().fit(X, y)
    assert m.lr == ModelSpec("logreg").lr
    assert all(b <= a + 1e-12 for a, b in zip(m.losses, m.losses[1:]))
