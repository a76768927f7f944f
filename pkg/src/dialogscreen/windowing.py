"""Sliding-window expansion of per-session scores into avg/Q1/Q2/Q3 columns."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .extraction.scores import FEATURES
from .multilabel import Category

STATS = ("avg", "q1", "q2", "q3")
COLUMNS = tuple(f"{f}_{s}" for f in FEATURES for s in STATS)
WINDOW = 30


def quartile_index(k: int, m: int) -> int:
    """Round-half-up of k*m/4, clamped into the window."""
    return min(max(math.floor(k * m / 4 + 0.5), 0), m - 1)


def window_stats(values: Sequence[float], window: int = WINDOW) -> tuple:
    """(avg, Q1, Q2, Q3) over the last ``window`` values of ``values``."""
    if len(values) == 0:
        raise DataError("window_stats needs at least one value")
    w = np.asarray(values, dtype=float)[-window:]
    m = len(w)
    y = np.sort(w)
    return (float(w.mean()),) + tuple(float(y[quartile_index(k, m)]) for k in (1, 2, 3))


def _window_block(history: np.ndarray, window: int) -> np.ndarray:
    """Windowed rows for one user's ``(L, F)`` score history -> ``(L, 4F)``."""
    n_sessions, n_feat = history.shape
    out = np.empty((n_sessions, n_feat * 4))
    for i in range(n_sessions):
        w = history[max(0, i - window + 1) : i + 1]
        m = len(w)
        y = np.sort(w, axis=0)
        out[i, 0::4] = w.mean(axis=0)
        for k in (1, 2, 3):
            out[i, k::4] = y[quartile_index(k, m)]
    return out


@dataclass(frozen=True)
class WindowedRow:
    session_id: str
    user_id: str
    values: dict
    label: Optional[Category] = None


@dataclass
class FeatureMatrix:
    session_ids: list
    user_ids: list
    labels: list  # Category or None per row
    values: np.ndarray
    column_names: tuple = COLUMNS
    active_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.active_mask is None:
            self.active_mask = np.ones(len(self.column_names), dtype=bool)
        self.active_mask = np.asarray(self.active_mask, dtype=bool)
        if self.values.shape != (len(self.session_ids), len(self.column_names)):
            raise DataError(f"matrix shape {self.values.shape} does not match its schema")

    def __len__(self):
        return len(self.session_ids)

    @property
    def active_columns(self) -> list:
        return [c for c, on in zip(self.column_names, self.active_mask) if on]

    def model_input(self, rows=None) -> np.ndarray:
        X = self.values[:, self.active_mask]
        return X if rows is None else X[rows]

    def category_codes(self, rows=None) -> np.ndarray:
        idx = range(len(self)) if rows is None else rows
        return np.array([self.labels[i].code for i in idx], dtype=np.int64)

    def labelled_rows(self) -> np.ndarray:
        return np.array([i for i, c in enumerate(self.labels) if c is not None], dtype=np.int64)

    def index_of(self, session_ids) -> np.ndarray:
        lookup = {s: i for i, s in enumerate(self.session_ids)}
        return np.array([lookup[s] for s in session_ids], dtype=np.int64)

    def row(self, i: int) -> WindowedRow:
        return WindowedRow(
            self.session_ids[i],
            self.user_ids[i],
            dict(zip(self.column_names, self.values[i].tolist())),
            self.labels[i],
        )

    def with_mask(self, mask) -> "FeatureMatrix":
        return FeatureMatrix(self.session_ids, self.user_ids, self.labels, self.values, self.column_names, mask)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("session_id", "user_id", "category") + tuple(self.column_names))
            for i in range(len(self)):
                label = "" if self.labels[i] is None else self.labels[i].value
                writer.writerow([self.session_ids[i], self.user_ids[i], label] + [repr(v) for v in self.values[i].tolist()])

    @classmethod
    def from_csv(cls, path, mask_path=None) -> "FeatureMatrix":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        columns = tuple(header[3:])
        matrix = cls(
            [r[0] for r in rows],
            [r[1] for r in rows],
            [Category(r[2]) if r[2] else None for r in rows],
            np.array([[float(v) for v in r[3:]] for r in rows]).reshape(len(rows), len(columns)),
            columns,
        )
        if mask_path is not None:
            matrix = matrix.with_mask(read_mask(mask_path, columns))
        return matrix


def write_mask(columns, mask, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c, on in zip(columns, mask):
            if on:
                fh.write(c + "\n")


def read_mask(path, columns) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        active = {line.strip() for line in fh if line.strip()}
    unknown = active - set(columns)
    if unknown:
        raise DataError(f"mask names unknown columns: {sorted(unknown)}")
    return np.array([c in active for c in columns], dtype=bool)


def expand_corpus(corpus, scores: dict, window: int = WINDOW) -> FeatureMatrix:
    """One windowed row per session, in corpus order; windows never cross users."""
    by_user: dict = {}
    for s in corpus:
        if s.session_id not in scores:
            raise DataError(f"no scores for session {s.session_id!r}")
        by_user.setdefault(s.user_id, []).append(s)
    values = {}
    for sessions in by_user.values():
        sessions = sorted(sessions, key=lambda s: (s.start, s.session_id))
        history = np.array([scores[s.session_id].values() for s in sessions])
        for s, row in zip(sessions, _window_block(history, window)):
            values[s.session_id] = row
    ordered = list(corpus)
    return FeatureMatrix(
        [s.session_id for s in ordered],
        [s.user_id for s in ordered],
        [s.category for s in ordered],
        np.array([values[s.session_id] for s in ordered]).reshape(len(ordered), len(COLUMNS)),
    )


_CENT = Decimal("0.01")


def round2(x: float) -> float:
    """Two decimals, ties away from zero, judged on the shortest decimal repr."""
    return float(Decimal(repr(float(x))).quantize(_CENT, rounding=ROUND_HALF_UP))


def round_and_prune(matrix: FeatureMatrix, reference) -> FeatureMatrix:
    """Round every value to 2 decimals and deactivate columns that are constant
    over the ``reference`` rows (indices into ``matrix``)."""
    reference = np.asarray(reference, dtype=np.int64)
    if reference.size == 0:
        raise DataError("round_and_prune needs at least one reference row")
    rounded = np.array([round2(v) for v in matrix.values.ravel().tolist()]).reshape(matrix.values.shape)
    ref = rounded[reference]
    varying = np.any(ref != ref[0], axis=0)
    return FeatureMatrix(
        matrix.session_ids, matrix.user_ids, matrix.labels, rounded, matrix.column_names,
        matrix.active_mask & varying,
    )
