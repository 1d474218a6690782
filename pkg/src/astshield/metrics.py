"""Confusion-matrix metrics, stratified K-fold plans, cross-validation.

The positive class is malicious (label 1) everywhere.  Zero-denominator
metrics come back as ``None`` — a distinct undefined marker, never 0, so
averages cannot be silently inflated.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

UNDEFINED = "NA"  # CSV marker for undefined metric values


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    def as_row(self) -> list[str]:
        return [_fmt(self.accuracy), _fmt(self.precision), _fmt(self.recall), _fmt(self.f1)]


def _fmt(value: float | None) -> str:
    return UNDEFINED if value is None else f"{value:.6f}"


def confusion(
    predictions: Sequence[float], labels: Sequence[int], threshold: float = 0.5
) -> ConfusionMatrix:
    """Count outcomes; a prediction is positive iff probability >= threshold."""
    if len(predictions) != len(labels):
        raise ValueError(f"{len(predictions)} predictions vs {len(labels)} labels")
    tp = fp = fn = tn = 0
    for prob, label in zip(predictions, labels):
        positive = prob >= threshold
        if label == 1:
            if positive:
                tp += 1
            else:
                fn += 1
        else:
            if positive:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


def metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) > 0 else None
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) > 0 else None
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return Metrics(accuracy, precision, recall, f1)


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[tuple[str, ...], ...]

    @property
    def k(self) -> int:
        return len(self.folds)

    def train_ids(self, fold_index: int) -> tuple[str, ...]:
        return tuple(
            sample_id
            for i, fold in enumerate(self.folds)
            if i != fold_index
            for sample_id in fold
        )

    def validation_ids(self, fold_index: int) -> tuple[str, ...]:
        return self.folds[fold_index]


def kfold(labeled_ids: Sequence[tuple[str, int]], k: int = 5, seed: int = 0) -> FoldPlan:
    """Stratified K folds: disjoint, covering, per-label counts within 1."""
    if k < 2:
        raise ValueError("k must be at least 2")
    by_label: dict[int, list[str]] = {}
    for sample_id, label in labeled_ids:
        by_label.setdefault(label, []).append(sample_id)
    for label, pool in sorted(by_label.items()):
        if len(pool) < k:
            raise ValueError(f"label {label} has {len(pool)} samples, fewer than k={k}")
    rng = np.random.default_rng(seed)
    folds: list[list[str]] = [[] for _ in range(k)]
    for label in sorted(by_label):
        pool = by_label[label]
        order = rng.permutation(len(pool))
        for position, idx in enumerate(order):
            folds[position % k].append(pool[idx])
    return FoldPlan(tuple(tuple(f) for f in folds))


@dataclass(frozen=True)
class CrossValResult:
    per_fold: tuple[Metrics, ...]
    mean: Metrics
    std: Metrics


def _aggregate(values: list[float | None], reducer) -> float | None:
    defined = [v for v in values if v is not None]
    return reducer(defined) if defined else None


def cross_validate(
    trainer: Callable[[Sequence[str], Sequence[str]], Sequence[float]],
    labeled_ids: Sequence[tuple[str, int]],
    k: int = 5,
    seed: int = 0,
    threshold: float = 0.5,
) -> CrossValResult:
    """Train K independent models; ``trainer(train_ids, val_ids)`` returns
    malicious-probabilities for ``val_ids`` in order."""
    plan = kfold(labeled_ids, k, seed)
    label_of = dict(labeled_ids)
    per_fold: list[Metrics] = []
    for fold_index in range(plan.k):
        train_ids = plan.train_ids(fold_index)
        val_ids = plan.validation_ids(fold_index)
        overlap = set(train_ids) & set(val_ids)
        if overlap:
            raise AssertionError(f"fold {fold_index} leaks ids: {sorted(overlap)[:3]}")
        probs = trainer(train_ids, val_ids)
        if len(probs) != len(val_ids):
            raise ValueError(f"trainer returned {len(probs)} predictions for {len(val_ids)} samples")
        cm = confusion(probs, [label_of[i] for i in val_ids], threshold)
        per_fold.append(metrics(cm))

    def collect(attr: str) -> list[float | None]:
        return [getattr(m, attr) for m in per_fold]

    mean = Metrics(*(_aggregate(collect(a), statistics.fmean) for a in ("accuracy", "precision", "recall", "f1")))
    std = Metrics(
        *(
            _aggregate(collect(a), lambda vals: statistics.pstdev(vals) if len(vals) > 1 else 0.0)
            for a in ("accuracy", "precision", "recall", "f1")
        )
    )
    return CrossValResult(tuple(per_fold), mean, std)


COMPARISON_HEADER = ("Model", "Accuracy", "Precision", "Recall", "F1")


def write_comparison_csv(rows: Sequence[tuple[str, Metrics]], path: str | Path) -> None:
    """Model-comparison table, one row per model."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPARISON_HEADER)
        for name, m in rows:
            writer.writerow([name, *m.as_row()])


def write_fold_csv(result: CrossValResult, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "accuracy", "precision", "recall", "f1"])
        for i, m in enumerate(result.per_fold):
            writer.writerow([i, *m.as_row()])
        writer.writerow(["mean", *result.mean.as_row()])
        writer.writerow(["std", *result.std.as_row()])


def read_comparison_csv(path: str | Path) -> list[tuple[str, Metrics]]:
    rows: list[tuple[str, Metrics]] = []
    with Path(path).open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COMPARISON_HEADER:
            raise ValueError(f"unexpected comparison header {header!r} in {path}")
        for row in reader:
            name, *vals = row
            parsed = [None if v == UNDEFINED else float(v) for v in vals]
            rows.append((name, Metrics(*parsed)))
    return rows
