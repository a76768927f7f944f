"""Versioned JSON model documents.

Layout: ``{"format", "version", "kind", "params", "seed", "classes",
"active_columns", "meta", "state"}`` where ``state`` holds the fitted arrays.
Keys are sorted and floats written with ``repr`` so a document is a pure
function of the fitted model.
"""
from __future__ import annotations

import json

import numpy as np

from .forest import RandomForest
from .naive_bayes import GaussianNB
from .tree import DecisionTree

FORMAT = "dialogscreen-model"
VERSION = 1

_TREE_ARRAYS = {
    "feature": ("feature_", np.int64),
    "threshold": ("threshold_", np.float64),
    "impurity": ("impurity_", np.float64),
    "n_node_samples": ("n_node_samples_", np.int64),
    "left": ("left_", np.int64),
    "right": ("right_", np.int64),
    "value": ("value_", np.float64),
}


def model_to_dict(model, active_columns=None, meta=None) -> dict:
    model._check_fitted()
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "params": model.get_params(),
        "classes": model.classes_.tolist(),
        "n_features": int(model.n_features_),
        "active_columns": list(active_columns) if active_columns is not None else None,
        "meta": meta or {},
    }
    if isinstance(model, GaussianNB):
        doc.update(kind="nb", seed=None, state={
            "theta": model.theta_.tolist(),
            "var": model.var_.tolist(),
            "class_prior": model.class_prior_.tolist(),
            "epsilon": model.epsilon_,
        })
    elif isinstance(model, DecisionTree):
        doc.update(kind="tree", seed=int(model.random_state),
                   state={k: getattr(model, attr).tolist() for k, (attr, _) in _TREE_ARRAYS.items()})
    elif isinstance(model, RandomForest):
        state = {k: getattr(model, attr).tolist() for k, (attr, _) in _TREE_ARRAYS.items()}
        state["offsets"] = model.offsets_.tolist()
        state["tree_seeds"] = model.tree_seeds_.tolist()
        doc.update(kind="forest", seed=int(model.random_state), state=state)
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return doc


def model_from_dict(doc: dict):
    if doc.get("format") != FORMAT:
        raise ValueError("not a model document")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported model document version {doc.get('version')}")
    kind, state = doc["kind"], doc["state"]
    if kind == "nb":
        model = GaussianNB(**doc["params"])
        model.theta_ = np.array(state["theta"], dtype=float)
        model.var_ = np.array(state["var"], dtype=float)
        model.class_prior_ = np.array(state["class_prior"], dtype=float)
        model.epsilon_ = state["epsilon"]
    else:
        cls = DecisionTree if kind == "tree" else RandomForest
        model = cls(**doc["params"], random_state=doc["seed"])
        for key, (attr, dtype) in _TREE_ARRAYS.items():
            setattr(model, attr, np.array(state[key], dtype=dtype))
        model.value_ = model.value_.reshape(len(model.feature_), len(doc["classes"]))
        if kind == "forest":
            model.offsets_ = np.array(state["offsets"], dtype=np.int64)
            model.tree_seeds_ = np.array(state["tree_seeds"], dtype=np.int64)
    model.classes_ = np.array(doc["classes"], dtype=np.int64)
    model.n_features_ = doc["n_features"]
    return model


def dumps(model, active_columns=None, meta=None) -> str:
    return json.dumps(model_to_dict(model, active_columns, meta), sort_keys=True, separators=(",", ":"))


def save_model(model, path, active_columns=None, meta=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model, active_columns, meta) + "\n")


def load_model(path) -> tuple:
    """Returns ``(model, active_columns, meta)``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return model_from_dict(doc), doc.get("active_columns"), doc.get("meta", {})
