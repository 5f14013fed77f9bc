"""Confusion matrices and classification metrics.

Pure numeric primitives: no model or corpus dependencies. Experiment
orchestration lives in :mod:`picoengine.experiments`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix with true classes on rows, predictions on columns."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise DataError(f"confusion matrix must be square, got {counts.shape}")
        if (counts < 0).any():
            raise DataError("confusion matrix counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def class_count(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def add(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.class_count != self.class_count:
            raise DataError("cannot add confusion matrices of different sizes")
        return ConfusionMatrix(self.counts + other.counts)

    def to_lists(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self.counts]


def confusion(
    preds: Sequence[int], golds: Sequence[int], class_count: int
) -> ConfusionMatrix:
    """Count matrix over paired predictions and gold labels."""
    if len(preds) != len(golds):
        raise DataError(f"{len(preds)} predictions for {len(golds)} gold labels")
    if not preds:
        raise DataError("cannot build a confusion matrix from empty input")
    counts = np.zeros((class_count, class_count), dtype=np.int64)
    for p, g in zip(preds, golds):
        p_ = int(p)
        g_ = int(g)
        if not (0 <= p_ < class_count and 0 <= g_ < class_count):
            raise DataError(
                f"label out of range for {class_count} classes: pred={p_}, gold={g_}"
            )
        counts[g_, p_] += 1
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def _prf(tp: float, pred_total: float, gold_total: float) -> ClassMetrics:
    precision = tp / pred_total if pred_total else 0.0
    recall = tp / gold_total if gold_total else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return ClassMetrics(precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    per_class: tuple[ClassMetrics, ...]


def metrics(matrix: ConfusionMatrix) -> Metrics:
    """Accuracy plus per-class precision, recall, and F1.

    Zero denominators yield 0 by convention.
    """
    total = matrix.total
    if total == 0:
        raise DataError("confusion matrix is empty")
    counts = matrix.counts
    col_sums = counts.sum(axis=0)
    row_sums = counts.sum(axis=1)
    per_class = tuple(
        _prf(float(counts[c, c]), float(col_sums[c]), float(row_sums[c]))
        for c in range(matrix.class_count)
    )
    return Metrics(accuracy=matrix.trace / total, per_class=per_class)


def micro_metrics(matrix: ConfusionMatrix, classes: Sequence[int]) -> ClassMetrics:
    """Micro-averaged precision, recall, and F1 over a subset of classes."""
    if not classes:
        raise DataError("micro averaging needs at least one class")
    counts = matrix.counts
    col_sums = counts.sum(axis=0)
    row_sums = counts.sum(axis=1)
    tp = float(sum(counts[c, c] for c in classes))
    pred_total = float(sum(col_sums[c] for c in classes))
    gold_total = float(sum(row_sums[c] for c in classes))
    return _prf(tp, pred_total, gold_total)


def aggregate_mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample (n-1) standard deviation; std is 0 for a single value."""
    if not values:
        raise DataError("cannot aggregate an empty value list")
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


@dataclass
class EvalReport:
    """Metrics over one or more evaluation runs.

    For multi-run reports the confusion matrix is pooled over runs, so
    ``accuracy`` stays equal to trace/total, while ``mean_std`` carries the
    across-run mean and sample standard deviation of each headline metric.
    """

    accuracy: float
    per_class: tuple[ClassMetrics, ...]
    confusion: ConfusionMatrix
    runs: int = 1
    mean_std: dict[str, tuple[float, float]] = field(default_factory=dict)
    run_details: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": [m.to_dict() for m in self.per_class],
            "confusion": self.confusion.to_lists(),
            "runs": self.runs,
            "mean_std": {
                name: {"mean": pair[0], "std": pair[1]}
                for name, pair in sorted(self.mean_std.items())
            },
            "run_details": self.run_details,
        }


def report_from_matrix(
    matrix: ConfusionMatrix,
    runs: int = 1,
    mean_std: dict[str, tuple[float, float]] | None = None,
    run_details: list[dict] | None = None,
) -> EvalReport:
    m = metrics(matrix)
    return EvalReport(
        accuracy=m.accuracy,
        per_class=m.per_class,
        confusion=matrix,
        runs=runs,
        mean_std=mean_std or {},
        run_details=run_details or [],
    )
