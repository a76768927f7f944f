"""From-scratch classifiers, feature selection and model selection."""
import numpy as np

from ..multilabel import Category
from .base import NotFittedError, derive_seed
from .forest import RandomForest, train_forest
from .model_selection import (
    FAMILIES,
    CVResult,
    GridSpec,
    effective_folds,
    grid_search,
    make_model,
    stratified_folds,
)
from .naive_bayes import GaussianNB, predict_proba_gnb, train_gnb
from .persistence import load_model, model_from_dict, model_to_dict, save_model
from .selection import SELECTOR_PARAMS, mdi_select, select_features
from .tree import DecisionTree, train_tree


def predict_with_confidence(model, x) -> tuple:
    """``(Category, probability)`` of the most probable class for one row."""
    if getattr(model, "classes_", None) is None:
        raise NotFittedError(f"{type(model).__name__} is not fitted")
    proba = model.predict_proba(np.asarray(x, dtype=float).reshape(1, -1))[0]
    j = int(np.argmax(proba))
    return Category.from_code(model.classes_[j]), float(proba[j])


__all__ = [
    "CVResult",
    "DecisionTree",
    "FAMILIES",
    "GaussianNB",
    "GridSpec",
    "NotFittedError",
    "RandomForest",
    "SELECTOR_PARAMS",
    "derive_seed",
    "effective_folds",
    "grid_search",
    "load_model",
    "make_model",
    "mdi_select",
    "model_from_dict",
    "model_to_dict",
    "predict_proba_gnb",
    "predict_with_confidence",
    "save_model",
    "select_features",
    "stratified_folds",
    "train_forest",
    "train_gnb",
    "train_tree",
]
