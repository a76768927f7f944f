"""Exhaustive grid search with stratified k-fold cross-validation."""
from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import yaml

from ..multilabel import sample_accuracy
from .base import derive_seed
from .forest import RandomForest
from .naive_bayes import GaussianNB
from .tree import DecisionTree

log = logging.getLogger(__name__)

FAMILIES = {"nb": GaussianNB, "dt": DecisionTree, "rf": RandomForest}


def make_model(family: str, params: dict, seed: int = 0):
    cls = FAMILIES[family]
    if cls is GaussianNB:
        return cls(**params)
    return cls(**params, random_state=seed)


def _normalise(value):
    return None if value == "None" else value


@dataclass
class GridSpec:
    """Named parameter lists; enumeration is ``itertools.product`` over the
    names in declaration order (last name varies fastest)."""

    params: dict

    @classmethod
    def from_mapping(cls, mapping: dict) -> "GridSpec":
        return cls({k: [_normalise(v) for v in vs] for k, vs in mapping.items()})

    @classmethod
    def load(cls, path) -> "GridSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_mapping(yaml.safe_load(fh) or {})

    def configurations(self) -> list:
        if not self.params or any(len(v) == 0 for v in self.params.values()):
            return []
        names = list(self.params)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.params.values())]


@dataclass
class CVResult:
    family: str
    configurations: list
    fold_scores: np.ndarray
    folds: int
    seed: int = 0
    notes: list = field(default_factory=list)

    @property
    def mean_scores(self) -> np.ndarray:
        return self.fold_scores.mean(axis=1)

    @property
    def best_index(self) -> int:
        # np.argmax returns the first maximum: earliest grid position wins ties
        return int(np.argmax(self.mean_scores))

    @property
    def best_params(self) -> dict:
        return dict(self.configurations[self.best_index])

    @property
    def best_score(self) -> float:
        return float(self.mean_scores[self.best_index])

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "folds": self.folds,
            "seed": self.seed,
            "best_index": self.best_index,
            "best_params": self.best_params,
            "best_score": self.best_score,
            "results": [
                {"params": cfg, "mean_score": float(m), "fold_scores": [float(s) for s in row]}
                for cfg, m, row in zip(self.configurations, self.mean_scores, self.fold_scores)
            ],
            "notes": list(self.notes),
        }


def effective_folds(y, folds: int) -> int:
    """``folds`` reduced (with a warning) to the rarest class count, floor 2."""
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    y = np.asarray(y)
    if len(y) < 2:
        raise ValueError("cross-validation needs at least 2 samples")
    _, counts = np.unique(y, return_counts=True)
    rarest = int(counts.min())
    if rarest < folds:
        reduced = max(2, min(rarest, len(y)))
        warnings.warn(f"rarest class has {rarest} samples; using {reduced} folds instead of {folds}",
                      stacklevel=2)
        return reduced
    return folds


def stratified_folds(y, folds: int, seed: int = 0) -> np.ndarray:
    """Fold id per sample; each class is shuffled and dealt round-robin, the
    dealing position carrying over between classes."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    out = np.empty(len(y), dtype=np.int64)
    position = 0
    for value in np.unique(y):
        members = np.flatnonzero(y == value)
        members = members[rng.permutation(len(members))]
        out[members] = (position + np.arange(len(members))) % folds
        position += len(members)
    return out


def _score(y_true, y_pred) -> float:
    return sample_accuracy(np.asarray(y_true), np.asarray(y_pred))


def _forest_group_key(cfg: dict):
    return tuple((k, repr(v)) for k, v in cfg.items() if k != "n_estimators")


def grid_search(family: str, grid: GridSpec, X, y, folds: int = 10, seed: int = 0) -> CVResult:
    """Score every grid configuration by mean multi-label accuracy over
    stratified folds and pick the best (earliest on ties).

    Within a fold every configuration gets the same seed. For forests this
    means configurations differing only in ``n_estimators`` share their first
    trees, so each such group is grown once at the largest size and scored on
    its prefixes.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown model family {family!r}")
    configs = grid.configurations()
    if not configs:
        raise ValueError("empty grid")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        k = effective_folds(y, folds)
    notes.extend(str(w.message) for w in caught)
    for note in notes:
        log.warning(note)
    assignment = stratified_folds(y, k, seed)
    scores = np.zeros((len(configs), k))

    for f in range(k):
        train, valid = assignment != f, assignment == f
        Xtr, ytr, Xva, yva = X[train], y[train], X[valid], y[valid]
        fold_seed = derive_seed(seed, f)
        if family == "rf":
            groups: dict = {}
            for i, cfg in enumerate(configs):
                groups.setdefault(_forest_group_key(cfg), []).append(i)
            for members in groups.values():
                sizes = sorted({int(configs[i]["n_estimators"]) for i in members})
                params = dict(configs[members[0]], n_estimators=sizes[-1])
                forest = make_model("rf", params, fold_seed).fit(Xtr, ytr)
                proba = forest.predict_proba_prefixes(Xva, sizes)
                for i in members:
                    p = proba[sizes.index(int(configs[i]["n_estimators"]))]
                    scores[i, f] = _score(yva, forest.classes_[np.argmax(p, axis=1)])
        else:
            for i, cfg in enumerate(configs):
                model = make_model(family, cfg, fold_seed).fit(Xtr, ytr)
                scores[i, f] = _score(yva, model.predict(Xva))
    return CVResult(family, configs, scores, k, seed, notes)
