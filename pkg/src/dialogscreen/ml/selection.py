"""Importance-threshold feature selection."""
from __future__ import annotations

import numpy as np

from .forest import RandomForest

SELECTOR_PARAMS = {
    "n_estimators": 100,
    "criterion": "gini",
    "max_depth": None,
    "min_samples_split": 2,
    "min_samples_leaf": 1,
    "max_features": "sqrt",
}


def mdi_select(importances) -> np.ndarray:
    """Keep features whose importance is at least the mean importance."""
    importances = np.asarray(importances, dtype=float)
    if importances.size == 0:
        raise ValueError("no importances to select from")
    if np.any(importances < 0):
        raise ValueError("importances must be non-negative")
    return importances >= importances.mean()


def select_features(X, y, seed: int = 0, params: dict = None) -> tuple:
    """Fit a forest on ``(X, y)`` and threshold its MDI at the mean.

    Returns ``(mask, importances)`` over the columns of ``X``.
    """
    forest = RandomForest(**(params or SELECTOR_PARAMS), random_state=seed).fit(X, y)
    importances = forest.feature_importances_
    return mdi_select(importances), importances
