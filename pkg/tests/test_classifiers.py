from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from dialogscreen.ml import (
    DecisionTree,
    GaussianNB,
    NotFittedError,
    RandomForest,
    predict_proba_gnb,
    predict_with_confidence,
    train_forest,
    train_gnb,
    train_tree,
)
from dialogscreen.ml.base import derive_seed, resolve_count, resolve_max_features, resolve_min_split
from dialogscreen.multilabel import Category


def separable(n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, size=(n, 2))
    y = (X[:, 0] + X[:, 1] > 1).astype(np.int64) * 2
    return X, y


def informative_fixture(seed, n=200):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    signal = y + rng.normal(0, 0.6, n)
    noise = rng.normal(0, 1, n)
    return np.column_stack([noise, signal]), y


# --- parameter resolution -------------------------------------------------

def test_fractional_counts_use_ceiling():
    assert resolve_count(0.001, 2000, "x") == 2
    assert resolve_count(0.1, 205, "x") == 21
    assert resolve_count(1, 50, "x") == 1
    with pytest.warns(UserWarning):
        assert resolve_min_split(1, 50) == 2
    assert resolve_min_split(0.001, 100) == 2
    assert resolve_max_features("sqrt", 22) == 5
    assert resolve_max_features("log2", 22) == 5
    assert resolve_max_features(None, 22) == 22


def test_derived_seeds_are_stable_and_distinct():
    assert derive_seed(42, 0) == derive_seed(42, 0)
    assert len({derive_seed(42, t) for t in range(100)}) == 100


# --- decision tree ----------------------------------------------------------

def test_unbounded_tree_fits_consistent_data():
    X, y = separable()
    for criterion in ("gini", "entropy"):
        for splitter in ("best", "random"):
            tree = train_tree(X, y, {"criterion": criterion, "splitter": splitter}, seed=3)
            assert (tree.predict(X) == y).all()


def test_stump_has_one_split():
    X, y = separable()
    tree = DecisionTree(max_depth=1).fit(X, y)
    assert tree.depth <= 1 and tree.node_count <= 3


def test_fractional_leaf_size():
    X = np.arange(10, dtype=float).reshape(-1, 1)
    y = np.array([0, 1] * 5)
    tree = DecisionTree(min_samples_leaf=0.5).fit(X, y)
    assert all(tree.n_node_samples_[leaf] >= 5 for leaf in tree.leaves())


def test_leaf_counts_sum_to_node_sizes():
    X, y = separable(80, seed=4)
    tree = DecisionTree(max_depth=4, splitter="random", random_state=9).fit(X, y)
    assert np.array_equal(tree.value_.sum(axis=1), tree.n_node_samples_)
    internal = tree.feature_ >= 0
    assert (tree.left_[internal] >= 0).all() and (tree.right_[internal] >= 0).all()


def _gini(counts):
    n = sum(counts)
    return 1 - sum(Fraction(c, n) ** 2 for c in counts)


def _best_root_split(X, y):
    """Exhaustive root split with exact arithmetic: max gini decrease, lowest
    feature then lowest threshold on ties."""
    classes = sorted(set(y))
    n = len(y)
    parent = _gini([list(y).count(c) for c in classes])
    best = None
    for j in range(X.shape[1]):
        values = sorted(set(X[:, j]))
        for a, b in zip(values, values[1:]):
            t = a + (b - a) / 2
            left = [c for x, c in zip(X[:, j], y) if x <= t]
            right = [c for x, c in zip(X[:, j], y) if x > t]
            gain = parent - (Fraction(len(left), n) * _gini([left.count(c) for c in classes])
                             + Fraction(len(right), n) * _gini([right.count(c) for c in classes]))
            if best is None or gain > best[0]:
                best = (gain, j, t)
    return best


def test_root_split_matches_exhaustive_oracle():
    rng = np.random.default_rng(5)
    for _ in range(30):
        X = rng.integers(0, 6, size=(25, 3)).astype(float)
        y = rng.integers(0, 3, 25)
        tree = DecisionTree(max_depth=1).fit(X, y)
        oracle = _best_root_split(X, y)
        if oracle is None or oracle[0] <= 0:
            continue
        assert tree.feature_[0] == oracle[1]
        assert tree.threshold_[0] == oracle[2]


def test_tree_determinism_per_seed():
    X, y = separable(100, seed=2)
    a = DecisionTree(splitter="random", max_features="sqrt", random_state=5).fit(X, y)
    b = DecisionTree(splitter="random", max_features="sqrt", random_state=5).fit(X, y)
    assert np.array_equal(a.threshold_, b.threshold_)


def test_unfitted_models_raise():
    with pytest.raises(NotFittedError):
        DecisionTree().predict(np.zeros((1, 2)))
    with pytest.raises(NotFittedError):
        predict_with_confidence(RandomForest(), [0.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.integers(1, 4), st.integers(0, 10_000))
def test_tree_training_accuracy_on_consistent_data(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, size=(n, d)).astype(float)
    y = rng.integers(0, 3, n)
    # make the data consistent: identical rows share a label
    first = {}
    y = np.array([first.setdefault(tuple(row), label) for row, label in zip(X, y)])
    tree = DecisionTree(random_state=seed).fit(X, y)
    assert (tree.predict(X) == y).all()


# --- forest -----------------------------------------------------------------

def test_singleton_forest_equals_its_tree():
    X, y = separable(70, seed=1)
    forest = RandomForest(n_estimators=1, random_state=4).fit(X, y)
    assert np.array_equal(forest.predict(X), forest.tree(0).predict(X))


def test_forest_prefix_property():
    X, y = separable(70, seed=1)
    big = RandomForest(n_estimators=20, random_state=8).fit(X, y)
    small = RandomForest(n_estimators=5, random_state=8).fit(X, y)
    assert np.allclose(big.predict_proba_prefixes(X, [5])[0], small.predict_proba(X))


def test_forest_importances_normalised():
    X, y = informative_fixture(0)
    imp = train_forest(X, y, {"n_estimators": 30}, seed=1).feature_importances_
    assert (imp >= 0).all() and abs(imp.sum() - 1) <= 1e-9
    assert imp[1] > imp[0]


def test_two_tree_tie_gives_half_confidence():
    forest = RandomForest(n_estimators=2)
    forest._set_packed(np.array([0, 1, 2]), np.array([-1, -1]), np.zeros(2), np.zeros(2), np.array([1, 1]),
                       np.array([-1, -1]), np.array([-1, -1]), np.array([[1.0, 0.0], [0.0, 1.0]]))
    forest.classes_ = np.array([0, 2])
    forest.n_features_ = 1
    category, confidence = predict_with_confidence(forest, [0.3])
    assert confidence == 0.5 and category is Category.NONE_NONE


def test_pure_leaf_confidence():
    X = np.array([[0.0], [1.0]])
    tree = DecisionTree().fit(X, np.array([1, 3]))
    category, confidence = predict_with_confidence(tree, [0.9])
    assert category is Category.ANXIETY_DEPRESSION and confidence == 1.0


# --- naive Bayes ------------------------------------------------------------

def test_gnb_matches_closed_form():
    X = np.array([[-1.0], [0.0], [1.0], [9.0], [10.0], [11.0]])
    y = np.array([0, 0, 0, 2, 2, 2])
    eps = 1e-9 * np.var(X[:, 0])
    model = train_gnb(X, y, 1e-9)
    for x, k in ((0.0, 0), (10.0, 1)):
        want = oracles.gaussian_posterior([x], [[0.0], [10.0]], [[2 / 3 + eps]] * 2, [0.5, 0.5])
        got = predict_proba_gnb(model, [x])
        assert got[k] > 0.99
        assert np.allclose(got, want, atol=1e-9, rtol=0)


def test_gnb_symmetric_midpoint():
    X = np.array([[-2.0], [0.0], [8.0], [10.0]])
    model = GaussianNB(1e-5).fit(X, np.array([0, 0, 1, 1]))
    assert predict_proba_gnb(model, [4.0]) == pytest.approx([0.5, 0.5], abs=1e-9)


def test_gnb_single_class_and_constant_feature():
    X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    model = GaussianNB(1e-9).fit(X, np.array([3, 3, 3]))
    assert predict_proba_gnb(model, [100.0, 5.0]).tolist() == [1.0]
    model = GaussianNB(1e-9).fit(np.full((4, 1), 2.0), np.array([0, 0, 1, 1]))
    assert np.isfinite(model.joint_log_likelihood(np.array([[2.0], [50.0]]))).all()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_gnb_probabilities_normalised(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 3)) * rng.uniform(0.01, 100)
    y = rng.integers(0, 4, 30)
    proba = GaussianNB(1e-9).fit(X, y).predict_proba(rng.normal(size=(10, 3)) * 50)
    assert np.all((proba >= 0) & (proba <= 1))
    assert np.allclose(proba.sum(axis=1), 1.0)
