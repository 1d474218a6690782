import json
import random

import pytest

from codebert_harness.evaluation import (
    ConfusionCounts,
    aggregate,
    confusion,
    kfold_indices,
    metrics,
)

from conftest import SHARED_METRICS_FIXTURE


def test_metrics_match_shared_fixture_to_1e9():
    fixture = json.loads(SHARED_METRICS_FIXTURE.read_text(encoding="utf-8"))
    probs = [p for p, _ in fixture["pairs"]]
    labels = [l for _, l in fixture["pairs"]]
    counts = confusion(probs, labels, fixture["threshold"])
    assert {"tp": counts.tp, "fp": counts.fp, "fn": counts.fn, "tn": counts.tn} == fixture["confusion"]
    m = metrics(counts)
    for name, expected in fixture["expected"].items():
        assert abs(getattr(m, name) - expected) < 1e-9, name


def test_undefined_metrics_are_none_not_zero():
    m = metrics(ConfusionCounts(tp=0, fp=0, fn=3, tn=5))
    assert m.precision is None and m.f1 is None
    assert m.recall == pytest.approx(0.0)


def test_reference_confusion_fixture():
    m = metrics(ConfusionCounts(tp=3, fp=1, fn=0, tn=6))
    assert m.recall == pytest.approx(1.0)
    assert m.precision == pytest.approx(0.75)
    assert m.accuracy == pytest.approx(0.9)


def test_kfold_partition_laws():
    rng = random.Random(5)
    for _ in range(30):
        n0, n1 = rng.randrange(5, 40), rng.randrange(5, 40)
        labels = [0] * n0 + [1] * n1
        rng.shuffle(labels)
        folds = kfold_indices(labels, k=5, seed=rng.randrange(1000))
        seen = [i for fold in folds for i in fold]
        assert sorted(seen) == list(range(len(labels)))
        for label in (0, 1):
            counts = [sum(1 for i in fold if labels[i] == label) for fold in folds]
            assert max(counts) - min(counts) <= 1


def test_kfold_rejects_undersized_labels():
    with pytest.raises(ValueError):
        kfold_indices([0, 0, 0, 1, 1], k=3, seed=0)


def test_aggregate_skips_undefined():
    per_fold = [
        metrics(ConfusionCounts(2, 0, 0, 2)),
        metrics(ConfusionCounts(0, 0, 2, 2)),  # precision undefined
    ]
    mean, std = aggregate(per_fold)
    assert mean.precision == pytest.approx(1.0)  # only the defined fold counts
    assert mean.recall == pytest.approx(0.5)
    assert std.accuracy is not None
