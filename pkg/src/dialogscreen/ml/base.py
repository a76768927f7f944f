"""Parameter resolution and helpers shared by the estimators."""
from __future__ import annotations

import math
import warnings

import numpy as np

NO_DEPTH_LIMIT = 2**31 - 1


class NotFittedError(ValueError):
    pass


def derive_seed(*parts: int) -> int:
    """Independent 63-bit seed for the unit of work identified by ``parts``."""
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def resolve_count(value, n_total: int, name: str) -> int:
    """Integer counts pass through; floats in (0, 1] become ceil(value * n)."""
    if isinstance(value, (bool, np.bool_)):
        raise ValueError(f"{name} must be a number, got {value!r}")
    if isinstance(value, (int, np.integer)):
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")
        return int(value)
    value = float(value)
    if not 0.0 < value <= 1.0:
        raise ValueError(f"fractional {name} must lie in (0, 1], got {value}")
    return max(1, math.ceil(value * n_total))


def resolve_min_split(value, n_total: int) -> int:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool) and value == 1:
        warnings.warn("min_samples_split=1 cannot split anything; using 2", stacklevel=3)
        return 2
    return max(2, resolve_count(value, n_total, "min_samples_split"))


def resolve_max_features(value, n_features: int) -> int:
    if n_features == 0:
        return 0
    if value is None or value == "None":
        return n_features
    if value == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    if value == "log2":
        return max(1, math.ceil(math.log2(n_features)))
    if isinstance(value, (int, np.integer)):
        return max(1, min(int(value), n_features))
    if isinstance(value, float) and 0.0 < value <= 1.0:
        return max(1, math.ceil(value * n_features))
    raise ValueError(f"unsupported max_features {value!r}")


def resolve_max_depth(value) -> int:
    if value is None or value == "None":
        return NO_DEPTH_LIMIT
    if int(value) < 1:
        raise ValueError(f"max_depth must be >= 1, got {value}")
    return int(value)


def check_X(X, n_features=None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    return np.ascontiguousarray(X)


def check_Xy(X, y):
    X = check_X(X)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("cannot fit on an empty matrix")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
    return X, y


class Classifier:
    """Common prediction surface: ``classes_`` holds the category codes seen in
    training and ``predict_proba`` columns follow that order."""

    classes_ = None

    def _check_fitted(self):
        if self.classes_ is None:
            raise NotFittedError(f"{type(self).__name__} is not fitted")

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]
