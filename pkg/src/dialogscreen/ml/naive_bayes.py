"""Gaussian naive Bayes with variance smoothing."""
from __future__ import annotations

import numpy as np

from .base import Classifier, check_X, check_Xy


class GaussianNB(Classifier):
    """Per-class independent Gaussians.

    ``var_smoothing`` adds ``var_smoothing * max_j Var(X[:, j])`` to every
    class variance. When every feature is constant the absolute value of
    ``var_smoothing`` is added instead so the model stays usable.
    """

    def __init__(self, var_smoothing=1e-9):
        self.var_smoothing = var_smoothing

    def get_params(self) -> dict:
        return {"var_smoothing": self.var_smoothing}

    def fit(self, X, y, classes=None):
        X, y = check_Xy(X, y)
        if self.var_smoothing < 0:
            raise ValueError("var_smoothing must be non-negative")
        classes = np.unique(y) if classes is None else np.asarray(classes, dtype=np.int64)
        max_var = float(np.var(X, axis=0).max()) if X.shape[1] else 0.0
        self.epsilon_ = self.var_smoothing * max_var if max_var > 0 else float(self.var_smoothing)
        theta, var, prior = [], [], []
        for c in classes:
            rows = X[y == c]
            if len(rows) == 0:
                raise ValueError(f"class {c} has no training samples")
            theta.append(rows.mean(axis=0))
            var.append(rows.var(axis=0) + self.epsilon_)
            prior.append(len(rows) / len(X))
        self.classes_ = classes
        self.theta_ = np.array(theta)
        self.var_ = np.array(var)
        self.class_prior_ = np.array(prior)
        self.n_features_ = X.shape[1]
        if np.any(self.var_ <= 0):
            raise ValueError("zero variance after smoothing; use var_smoothing > 0")
        return self

    def joint_log_likelihood(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_X(X, self.n_features_)
        out = np.empty((X.shape[0], len(self.classes_)))
        for k in range(len(self.classes_)):
            norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.var_[k]))
            quad = -0.5 * np.sum((X - self.theta_[k]) ** 2 / self.var_[k], axis=1)
            out[:, k] = np.log(self.class_prior_[k]) + norm + quad
        return out

    def predict_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        top = jll.max(axis=1, keepdims=True)
        log_norm = top + np.log(np.sum(np.exp(jll - top), axis=1, keepdims=True))
        return np.exp(jll - log_norm)


def train_gnb(X, y, var_smoothing=1e-9, classes=None) -> GaussianNB:
    return GaussianNB(var_smoothing).fit(X, y, classes=classes)


def predict_proba_gnb(model: GaussianNB, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    proba = model.predict_proba(x)
    return proba[0] if x.ndim == 1 else proba
