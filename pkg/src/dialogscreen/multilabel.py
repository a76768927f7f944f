"""Multi-class transformation of the {anxiety, depression} label pair and
multi-label evaluation metrics.

Every metric accepts sequences of ``Category`` members, their string values,
or ``LabelPair`` instances; internally they are turned into an ``(n, 2)``
boolean label matrix (column 0 = anxiety, column 1 = depression).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

LABELS = ("anxiety", "depression")


class LabelPair(NamedTuple):
    anxiety: bool
    depression: bool

    def as_set(self) -> frozenset:
        return frozenset(name for name, on in zip(LABELS, self) if on)


class Category(str, Enum):
    NONE_NONE = "none_none"
    NONE_DEPRESSION = "none_depression"
    ANXIETY_NONE = "anxiety_none"
    ANXIETY_DEPRESSION = "anxiety_depression"

    @property
    def code(self) -> int:
        return CATEGORIES.index(self)

    @classmethod
    def from_code(cls, code: int) -> "Category":
        return CATEGORIES[int(code)]

    def __str__(self) -> str:
        return self.value


CATEGORIES = tuple(Category)


def to_category(pair: LabelPair) -> Category:
    anxiety, depression = bool(pair[0]), bool(pair[1])
    return Category(
        f"{'anxiety' if anxiety else 'none'}_{'depression' if depression else 'none'}"
    )


def to_pair(category) -> LabelPair:
    category = Category(category)
    first, second = category.value.split("_")
    return LabelPair(first == "anxiety", second == "depression")


def as_category(value) -> Category:
    if isinstance(value, Category):
        return value
    if isinstance(value, LabelPair) or (isinstance(value, tuple) and len(value) == 2):
        return to_category(value)
    if isinstance(value, (int, np.integer)):
        return Category.from_code(value)
    return Category(value)


_PAIR_TABLE = np.array([[False, False], [False, True], [True, False], [True, True]])


def label_matrix(values: Sequence) -> np.ndarray:
    if isinstance(values, np.ndarray) and values.dtype.kind in "iu":
        return _PAIR_TABLE[values]
    cats = [as_category(v) for v in values]
    out = np.zeros((len(cats), 2), dtype=bool)
    for i, c in enumerate(cats):
        out[i] = to_pair(c)
    return out


def _checked(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    if len(actual) != len(predicted):
        raise ValueError(f"length mismatch: {len(actual)} actual vs {len(predicted)} predicted")
    if len(actual) == 0:
        raise ValueError("metrics need at least one sample")
    return label_matrix(actual), label_matrix(predicted)


def _ratio(num: np.ndarray, den: np.ndarray, if_empty: np.ndarray) -> np.ndarray:
    out = if_empty.astype(float)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


def exact_match(actual, predicted) -> float:
    A, P = _checked(actual, predicted)
    return float(np.mean(np.all(A == P, axis=1)))


def sample_accuracy(actual, predicted) -> float:
    """Mean Jaccard index of the label sets; two empty sets score 1."""
    A, P = _checked(actual, predicted)
    inter = (A & P).sum(axis=1)
    union = (A | P).sum(axis=1)
    return float(np.mean(_ratio(inter, union, union == 0)))


def sample_precision(actual, predicted) -> float:
    A, P = _checked(actual, predicted)
    inter = (A & P).sum(axis=1)
    return float(np.mean(_ratio(inter, P.sum(axis=1), A.sum(axis=1) == 0)))


def sample_recall(actual, predicted) -> float:
    A, P = _checked(actual, predicted)
    inter = (A & P).sum(axis=1)
    return float(np.mean(_ratio(inter, A.sum(axis=1), P.sum(axis=1) == 0)))


def sample_f_measure(actual, predicted) -> float:
    A, P = _checked(actual, predicted)
    inter = (A & P).sum(axis=1)
    den = A.sum(axis=1) + P.sum(axis=1)
    return float(np.mean(_ratio(2 * inter, den, den == 0)))


def hamming_loss(actual, predicted) -> float:
    return 1.0 - sample_accuracy(actual, predicted)


def _prf(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f


def _macro_micro(A: np.ndarray, P: np.ndarray) -> dict:
    tp = (A & P).sum(axis=0)
    fp = (~A & P).sum(axis=0)
    fn = (A & ~P).sum(axis=0)
    per_label = [_prf(int(t), int(f), int(n)) for t, f, n in zip(tp, fp, fn)]
    macro = [float(np.mean([s[k] for s in per_label])) for k in range(3)]
    micro = _prf(int(tp.sum()), int(fp.sum()), int(fn.sum()))
    names = ("precision", "recall", "f_measure")
    return {name: {"macro": macro[k], "micro": float(micro[k])} for k, name in enumerate(names)}


def label_macro_micro(actual, predicted) -> dict:
    """Label-based (anxiety, depression) precision/recall/F, macro and micro."""
    A, P = _checked(actual, predicted)
    return _macro_micro(A, P)


def category_macro_micro(actual, predicted) -> dict:
    """Same aggregation over the four one-hot transformed categories."""
    _checked(actual, predicted)
    a = np.array([as_category(v).code for v in actual])
    p = np.array([as_category(v).code for v in predicted])
    onehot = np.eye(len(CATEGORIES), dtype=bool)
    return _macro_micro(onehot[a], onehot[p])


def confusion_matrix(actual, predicted) -> np.ndarray:
    """4x4 counts, rows = actual category, columns = predicted."""
    _checked(actual, predicted)
    out = np.zeros((len(CATEGORIES), len(CATEGORIES)), dtype=np.int64)
    for a, p in zip(actual, predicted):
        out[as_category(a).code, as_category(p).code] += 1
    return out


TABLE_COLUMNS = (
    "Acc.", "Exact match",
    "Precision macro", "Precision micro",
    "Recall macro", "Recall micro",
    "F-measure macro", "F-measure micro",
    "HL",
)


@dataclass
class EvaluationReport:
    n_samples: int
    exact_match: float
    accuracy: float
    hamming_loss: float
    precision: dict
    recall: dict
    f_measure: dict
    category_based: dict = field(default_factory=dict)
    confusion: list = field(default_factory=list)

    def table_row(self) -> dict:
        values = (
            self.accuracy, self.exact_match,
            self.precision["macro"], self.precision["micro"],
            self.recall["macro"], self.recall["micro"],
            self.f_measure["macro"], self.f_measure["micro"],
            self.hamming_loss,
        )
        return dict(zip(TABLE_COLUMNS, values))

    def to_text(self) -> str:
        lines = [
            f"n_samples = {self.n_samples}",
            f"exact_match = {self.exact_match!r}",
            f"accuracy = {self.accuracy!r}",
            f"hamming_loss = {self.hamming_loss!r}",
        ]
        for name in ("precision", "recall", "f_measure"):
            for agg, value in getattr(self, name).items():
                lines.append(f"{name}.{agg} = {value!r}")
        for name, aggs in self.category_based.items():
            for agg, value in aggs.items():
                lines.append(f"category_based.{name}.{agg} = {value!r}")
        for i, row in enumerate(self.confusion):
            for j, count in enumerate(row):
                lines.append(f"confusion.{CATEGORIES[i].value}.{CATEGORIES[j].value} = {count}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EvaluationReport":
        kv = {}
        for line in text.splitlines():
            if line.strip():
                key, _, value = line.partition(" = ")
                kv[key.strip()] = value.strip()
        nested = {"precision": {}, "recall": {}, "f_measure": {}}
        category_based: dict = {}
        confusion = [[0] * len(CATEGORIES) for _ in CATEGORIES]
        names = [c.value for c in CATEGORIES]
        for key, value in kv.items():
            parts = key.split(".")
            if parts[0] in nested and len(parts) == 2:
                nested[parts[0]][parts[1]] = float(value)
            elif parts[0] == "category_based":
                category_based.setdefault(parts[1], {})[parts[2]] = float(value)
            elif parts[0] == "confusion":
                confusion[names.index(parts[1])][names.index(parts[2])] = int(value)
        return cls(
            n_samples=int(kv["n_samples"]),
            exact_match=float(kv["exact_match"]),
            accuracy=float(kv["accuracy"]),
            hamming_loss=float(kv["hamming_loss"]),
            category_based=category_based,
            confusion=confusion,
            **nested,
        )


def evaluate(actual, predicted) -> EvaluationReport:
    A, P = _checked(actual, predicted)
    accuracy = sample_accuracy(actual, predicted)
    label_based = _macro_micro(A, P)
    return EvaluationReport(
        n_samples=len(actual),
        exact_match=exact_match(actual, predicted),
        accuracy=accuracy,
        hamming_loss=1.0 - accuracy,
        precision={"sample": sample_precision(actual, predicted), **label_based["precision"]},
        recall={"sample": sample_recall(actual, predicted), **label_based["recall"]},
        f_measure={"sample": sample_f_measure(actual, predicted), **label_based["f_measure"]},
        category_based=category_macro_micro(actual, predicted),
        confusion=confusion_matrix(actual, predicted).tolist(),
    )


def write_table(rows: dict, path=None) -> str:
    """Render ``{(scenario, model): report}`` as a CSV mirroring the results
    table layout (percentages, two decimals)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("Scenario", "Model") + TABLE_COLUMNS)
    for (scenario, model), report in rows.items():
        cells = [f"{100 * v:.2f}" for v in report.table_row().values()]
        writer.writerow([scenario, model] + cells)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
