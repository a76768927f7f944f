"""CART classification tree."""
from __future__ import annotations

import numpy as np

from . import _tree_core as core
from .base import (
    Classifier,
    check_X,
    check_Xy,
    resolve_count,
    resolve_max_depth,
    resolve_max_features,
    resolve_min_split,
)

CRITERIA = {"gini": core.GINI, "entropy": core.ENTROPY}


def node_importances(feature, node_imp, n_node, left, right, n_features) -> np.ndarray:
    """Per-feature sum of sample-weighted impurity decrease (unnormalised)."""
    out = np.zeros(n_features)
    total = n_node[0]
    for t in np.flatnonzero(feature >= 0):
        l, r = left[t], right[t]
        decrease = n_node[t] * node_imp[t] - n_node[l] * node_imp[l] - n_node[r] * node_imp[r]
        out[feature[t]] += max(decrease, 0.0) / total  # rounding can dip below 0
    return out


class DecisionTree(Classifier):
    """Greedy recursive partitioning on gini or entropy impurity.

    Parameters
    ----------
    criterion : {"gini", "entropy"}
    splitter : {"best", "random"}
        ``best`` scans midpoints between consecutive distinct values; ``random``
        draws one uniform threshold per candidate feature.
    max_depth : int or None
    min_samples_split, min_samples_leaf : int or float
        Floats in (0, 1] are fractions of the training-set size (ceiling).
    max_features : None, "sqrt", "log2" or int
        Candidate features sampled without replacement at every node.
    random_state : int
    """

    def __init__(self, criterion="gini", splitter="best", max_depth=None, min_samples_split=2,
                 min_samples_leaf=1, max_features=None, random_state=0):
        self.criterion = criterion
        self.splitter = splitter
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def get_params(self) -> dict:
        return {
            "criterion": self.criterion,
            "splitter": self.splitter,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "max_features": self.max_features,
        }

    def fit(self, X, y):
        X, y = check_Xy(X, y)
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.splitter not in ("best", "random"):
            raise ValueError(f"unknown splitter {self.splitter!r}")
        self.classes_, codes = np.unique(y, return_inverse=True)
        n, d = X.shape
        self.n_features_ = d
        arrays = core.grow_tree(
            X, codes.astype(np.int64), len(self.classes_), CRITERIA[self.criterion],
            self.splitter == "random", resolve_max_depth(self.max_depth),
            resolve_min_split(self.min_samples_split, n),
            resolve_count(self.min_samples_leaf, n, "min_samples_leaf"),
            resolve_max_features(self.max_features, d), int(self.random_state),
        )
        self._set_arrays(*arrays)
        return self

    def _set_arrays(self, feature, threshold, impurity, n_node, left, right, value):
        self.feature_ = feature
        self.threshold_ = threshold
        self.impurity_ = impurity
        self.n_node_samples_ = n_node
        self.left_ = left
        self.right_ = right
        self.value_ = value

    @property
    def node_count(self) -> int:
        return len(self.feature_)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for t in range(self.node_count):
            if self.feature_[t] >= 0:
                depth[self.left_[t]] = depth[self.right_[t]] = depth[t] + 1
        return int(depth.max())

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature_ < 0)

    def apply(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_X(X, self.n_features_)
        return core.apply_tree(X, self.feature_, self.threshold_, self.left_, self.right_, 0)

    def predict_proba(self, X) -> np.ndarray:
        leaves = self.apply(X)
        counts = self.value_[leaves]
        return counts / counts.sum(axis=1, keepdims=True)

    @property
    def feature_importances_(self) -> np.ndarray:
        self._check_fitted()
        raw = node_importances(self.feature_, self.impurity_, self.n_node_samples_,
                               self.left_, self.right_, self.n_features_)
        total = raw.sum()
        return raw / total if total > 0 else raw


def train_tree(X, y, params: dict, seed: int = 0) -> DecisionTree:
    return DecisionTree(**params, random_state=seed).fit(X, y)
