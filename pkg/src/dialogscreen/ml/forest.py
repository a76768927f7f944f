"""Bootstrap random forest with mean-decrease-in-impurity importances."""
from __future__ import annotations

import numpy as np

from . import _tree_core as core
from .base import (
    Classifier,
    check_X,
    check_Xy,
    derive_seed,
    resolve_count,
    resolve_max_depth,
    resolve_max_features,
    resolve_min_split,
)
from .tree import CRITERIA, DecisionTree, node_importances


class RandomForest(Classifier):
    """Forest of best-split CART trees, each grown on its own bootstrap sample.

    Tree ``t`` draws its bootstrap rows and feature subsets from a stream
    seeded by ``derive_seed(random_state, t)``, so the first ``k`` trees of a
    large forest equal a ``k``-tree forest with the same seed.
    """

    def __init__(self, n_estimators=100, criterion="gini", max_depth=None, min_samples_split=2,
                 min_samples_leaf=1, max_features="sqrt", random_state=0):
        self.n_estimators = n_estimators
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def get_params(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "criterion": self.criterion,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "max_features": self.max_features,
        }

    def fit(self, X, y):
        X, y = check_Xy(X, y)
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if int(self.n_estimators) < 1:
            raise ValueError("n_estimators must be >= 1")
        self.classes_, codes = np.unique(y, return_inverse=True)
        n, d = X.shape
        self.n_features_ = d
        self.tree_seeds_ = np.array(
            [derive_seed(self.random_state, t) for t in range(int(self.n_estimators))], dtype=np.int64
        )
        packed = core.grow_forest(
            X, codes.astype(np.int64), len(self.classes_), CRITERIA[self.criterion],
            resolve_max_depth(self.max_depth), resolve_min_split(self.min_samples_split, n),
            resolve_count(self.min_samples_leaf, n, "min_samples_leaf"),
            resolve_max_features(self.max_features, d), self.tree_seeds_,
        )
        self._set_packed(*packed)
        return self

    def _set_packed(self, offsets, feature, threshold, impurity, n_node, left, right, value):
        self.offsets_ = offsets
        self.feature_ = feature
        self.threshold_ = threshold
        self.impurity_ = impurity
        self.n_node_samples_ = n_node
        self.left_ = left
        self.right_ = right
        self.value_ = value

    @property
    def n_trees(self) -> int:
        return len(self.offsets_) - 1

    def tree(self, t: int) -> DecisionTree:
        """Tree ``t`` as a standalone :class:`DecisionTree`."""
        self._check_fitted()
        s, e = self.offsets_[t], self.offsets_[t + 1]
        tree = DecisionTree(self.criterion, "best", self.max_depth, self.min_samples_split,
                            self.min_samples_leaf, self.max_features, int(self.tree_seeds_[t]))
        tree.classes_ = self.classes_
        tree.n_features_ = self.n_features_
        tree._set_arrays(self.feature_[s:e], self.threshold_[s:e], self.impurity_[s:e],
                         self.n_node_samples_[s:e], self.left_[s:e], self.right_[s:e], self.value_[s:e])
        return tree

    def predict_proba_prefixes(self, X, prefixes) -> np.ndarray:
        """Class probabilities of the sub-forests made of the first ``p`` trees."""
        self._check_fitted()
        X = check_X(X, self.n_features_)
        prefixes = np.asarray(sorted(prefixes), dtype=np.int64)
        if prefixes[0] < 1 or prefixes[-1] > self.n_trees:
            raise ValueError(f"prefixes must lie in 1..{self.n_trees}")
        return core.forest_proba_prefixes(X, self.offsets_, self.feature_, self.threshold_,
                                          self.left_, self.right_, self.value_, prefixes)

    def predict_proba(self, X) -> np.ndarray:
        return self.predict_proba_prefixes(X, [self.n_trees])[0]

    @property
    def feature_importances_(self) -> np.ndarray:
        """Per-tree normalised MDI averaged over the trees that split at all."""
        self._check_fitted()
        per_tree = []
        for t in range(self.n_trees):
            s, e = self.offsets_[t], self.offsets_[t + 1]
            raw = node_importances(self.feature_[s:e], self.impurity_[s:e], self.n_node_samples_[s:e],
                                   self.left_[s:e], self.right_[s:e], self.n_features_)
            total = raw.sum()
            if total > 0:
                per_tree.append(raw / total)
        if not per_tree:
            return np.zeros(self.n_features_)
        return np.mean(per_tree, axis=0)


def train_forest(X, y, params: dict, seed: int = 0) -> RandomForest:
    return RandomForest(**params, random_state=seed).fit(X, y)
