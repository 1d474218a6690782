"""Metrics and stratified K-fold plans (independent implementation).

The positive class is malicious (label 1). Zero-denominator metrics are
``None``, never 0. Fold plans obey the same partition law as the
upstream toolkit: disjoint, covering, per-label fold sizes within 1.
"""

from __future__ import annotations

import csv
import random
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

UNDEFINED = "NA"


@dataclass(frozen=True)
class ConfusionCounts:
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
        return [
            UNDEFINED if v is None else f"{v:.6f}"
            for v in (self.accuracy, self.precision, self.recall, self.f1)
        ]


def confusion(probabilities: Sequence[float], labels: Sequence[int], threshold: float = 0.5) -> ConfusionCounts:
    if len(probabilities) != len(labels):
        raise ValueError(f"{len(probabilities)} probabilities vs {len(labels)} labels")
    tp = fp = fn = tn = 0
    for prob, label in zip(probabilities, labels):
        positive = prob >= threshold
        if label == 1:
            tp, fn = tp + int(positive), fn + int(not positive)
        else:
            fp, tn = fp + int(positive), tn + int(not positive)
    return ConfusionCounts(tp, fp, fn, tn)


def metrics(counts: ConfusionCounts) -> Metrics:
    if counts.total == 0:
        raise ValueError("no samples evaluated")
    accuracy = (counts.tp + counts.tn) / counts.total
    precision = counts.tp / (counts.tp + counts.fp) if (counts.tp + counts.fp) else None
    recall = counts.tp / (counts.tp + counts.fn) if (counts.tp + counts.fn) else None
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return Metrics(accuracy, precision, recall, f1)


def kfold_indices(labels: Sequence[int], k: int, seed: int) -> list[list[int]]:
    """Stratified folds of dataset indices."""
    if k < 2:
        raise ValueError("k must be at least 2")
    by_label: dict[int, list[int]] = {}
    for index, label in enumerate(labels):
        by_label.setdefault(label, []).append(index)
    for label, pool in sorted(by_label.items()):
        if len(pool) < k:
            raise ValueError(f"label {label} has {len(pool)} samples, fewer than k={k}")
    rng = random.Random(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for label in sorted(by_label):
        pool = list(by_label[label])
        rng.shuffle(pool)
        for position, index in enumerate(pool):
            folds[position % k].append(index)
    return folds


def aggregate(per_fold: Sequence[Metrics]) -> tuple[Metrics, Metrics]:
    """(mean, population std) over folds, skipping undefined values."""

    def reduce(attr: str, reducer) -> float | None:
        defined = [getattr(m, attr) for m in per_fold if getattr(m, attr) is not None]
        return reducer(defined) if defined else None

    names = ("accuracy", "precision", "recall", "f1")
    mean = Metrics(*(reduce(n, statistics.fmean) for n in names))
    std = Metrics(
        *(reduce(n, lambda vals: statistics.pstdev(vals) if len(vals) > 1 else 0.0) for n in names)
    )
    return mean, std


def write_fold_csv(per_fold: Sequence[Metrics], mean: Metrics, std: Metrics, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "accuracy", "precision", "recall", "f1"])
        for i, m in enumerate(per_fold):
            writer.writerow([i, *m.as_row()])
        writer.writerow(["mean", *mean.as_row()])
        writer.writerow(["std", *std.as_row()])


def write_comparison_csv(rows: Sequence[tuple[str, Metrics]], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["Model", "Accuracy", "Precision", "Recall", "F1"])
        for name, m in rows:
            writer.writerow([name, *m.as_row()])
