"""Fine-tuning and prediction on top of a pretrained RoBERTa-class model.

Stratified K-fold: each fold fine-tunes a fresh copy of the base model
with AdamW + cross-entropy, keeps the best-validation-loss epoch, and
reports metrics on its held-out fold. Sequences are truncated to the
configured subword length and padded per batch to the longest member.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch.optim import AdamW

from .data import Sample
from .evaluation import Metrics, aggregate, confusion, kfold_indices, metrics

DEFAULT_LEARNING_RATE = 2e-5
DEFAULT_BATCH_SIZE = 8
DEFAULT_WEIGHT_DECAY = 0.01
DEFAULT_MAX_LENGTH = 400


@dataclass(frozen=True)
class FinetuneConfig:
    learning_rate: float = DEFAULT_LEARNING_RATE
    batch_size: int = DEFAULT_BATCH_SIZE
    weight_decay: float = DEFAULT_WEIGHT_DECAY
    epochs: int = 3
    k: int = 5
    max_length: int = DEFAULT_MAX_LENGTH
    seed: int = 0
    mode: str = "ast"

    def __post_init__(self):
        if min(self.learning_rate, self.batch_size, self.epochs, self.k, self.max_length) <= 0:
            raise ValueError("config values must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight decay must be non-negative")
        if self.mode not in ("ast", "raw"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class FoldOutcome:
    metrics: Metrics
    best_epoch: int
    best_val_loss: float
    train_accuracy: float
    checkpoint_dir: Path | None = None


@dataclass
class FinetuneResult:
    per_fold: list[FoldOutcome]
    mean: Metrics
    std: Metrics

    @property
    def fold_metrics(self) -> list[Metrics]:
        return [f.metrics for f in self.per_fold]

    @property
    def train_accuracy(self) -> float:
        """Mean accuracy of each fold's best model on its own training split."""
        return float(np.mean([f.train_accuracy for f in self.per_fold]))


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def _encode(tokenizer, samples: Sequence[Sample], max_length: int) -> list[dict]:
    encoded = []
    for sample in samples:
        enc = tokenizer(sample.text, truncation=True, max_length=max_length)
        encoded.append({"input_ids": enc["input_ids"], "attention_mask": enc["attention_mask"]})
    return encoded


def _batches(indices: list[int], batch_size: int):
    for start in range(0, len(indices), batch_size):
        yield indices[start: start + batch_size]


def _collate(tokenizer, encoded: list[dict], labels: Sequence[int], batch_idx: list[int]):
    features = [encoded[i] for i in batch_idx]
    padded = tokenizer.pad(features, padding=True, return_tensors="pt")
    padded["labels"] = torch.tensor([labels[i] for i in batch_idx], dtype=torch.long)
    return padded


@torch.no_grad()
def _predict_probs(model, tokenizer, encoded: list[dict], labels, indices, batch_size: int) -> list[float]:
    model.eval()
    probs: list[float] = []
    for batch_idx in _batches(list(indices), batch_size):
        batch = _collate(tokenizer, encoded, labels, batch_idx)
        batch.pop("labels")
        logits = model(**batch).logits
        probs.extend(torch.softmax(logits, dim=-1)[:, 1].tolist())
    return probs


@torch.no_grad()
def _eval_loss(model, tokenizer, encoded, labels, indices, batch_size: int) -> float:
    model.eval()
    total, count = 0.0, 0
    for batch_idx in _batches(list(indices), batch_size):
        batch = _collate(tokenizer, encoded, labels, batch_idx)
        out = model(**batch)
        total += float(out.loss) * len(batch_idx)
        count += len(batch_idx)
    return total / count


def _train_fold(
    base_checkpoint: Path,
    tokenizer,
    encoded: list[dict],
    labels: list[int],
    train_idx: list[int],
    val_idx: list[int],
    config: FinetuneConfig,
    fold_seed: int,
):
    from transformers import AutoModelForSequenceClassification

    _seed_everything(fold_seed)
    model = AutoModelForSequenceClassification.from_pretrained(str(base_checkpoint), num_labels=2)
    optimizer = AdamW(model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)
    rng = random.Random(fold_seed)

    best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
    best_val = float("inf")
    best_epoch = 0
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = list(train_idx)
        rng.shuffle(order)
        for batch_idx in _batches(order, config.batch_size):
            batch = _collate(tokenizer, encoded, labels, batch_idx)
            optimizer.zero_grad()
            loss = model(**batch).loss
            loss.backward()
            optimizer.step()
        val_loss = _eval_loss(model, tokenizer, encoded, labels, val_idx, config.batch_size)
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
    model.load_state_dict(best_state)
    model.eval()
    return model, best_epoch, best_val


def finetune(
    samples: Sequence[Sample],
    config: FinetuneConfig,
    checkpoint: Path,
    out_dir: str | Path | None = None,
    threshold: float = 0.5,
) -> FinetuneResult:
    """K-fold fine-tuning; returns per-fold metrics and their mean/std."""
    from transformers import AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(str(checkpoint))
    encoded = _encode(tokenizer, samples, config.max_length)
    labels = [s.label for s in samples]
    folds = kfold_indices(labels, config.k, config.seed)
    out_dir = Path(out_dir) if out_dir is not None else None

    outcomes: list[FoldOutcome] = []
    for fold_index, val_idx in enumerate(folds):
        train_idx = [i for j, fold in enumerate(folds) if j != fold_index for i in fold]
        assert not set(train_idx) & set(val_idx)
        model, best_epoch, best_val = _train_fold(
            checkpoint, tokenizer, encoded, labels, train_idx, val_idx, config,
            fold_seed=config.seed * 1000 + fold_index,
        )
        probs = _predict_probs(model, tokenizer, encoded, labels, val_idx, config.batch_size)
        fold_metrics = metrics(confusion(probs, [labels[i] for i in val_idx], threshold))
        train_probs = _predict_probs(model, tokenizer, encoded, labels, train_idx, config.batch_size)
        train_acc = float(
            np.mean([(p >= threshold) == (labels[i] == 1) for p, i in zip(train_probs, train_idx)])
        )
        outcome = FoldOutcome(fold_metrics, best_epoch, best_val, train_acc)
        if out_dir is not None:
            fold_dir = out_dir / f"fold{fold_index}"
            fold_dir.mkdir(parents=True, exist_ok=True)
            model.save_pretrained(fold_dir)
            tokenizer.save_pretrained(fold_dir)
            outcome.checkpoint_dir = fold_dir
        outcomes.append(outcome)

    mean, std = aggregate([o.metrics for o in outcomes])
    return FinetuneResult(outcomes, mean, std)


def predict(
    checkpoint_dir: str | Path,
    samples: Sequence[Sample],
    max_length: int = DEFAULT_MAX_LENGTH,
    batch_size: int = DEFAULT_BATCH_SIZE,
    threshold: float = 0.5,
) -> list[tuple[str, float, int]]:
    """(script_id, malicious probability, predicted label) per sample."""
    if not samples:
        return []
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(str(checkpoint_dir))
    model = AutoModelForSequenceClassification.from_pretrained(str(checkpoint_dir))
    model.eval()
    encoded = _encode(tokenizer, samples, max_length)
    labels = [0] * len(samples)  # collate needs a label column; discarded
    probs = _predict_probs(model, tokenizer, encoded, labels, range(len(samples)), batch_size)
    return [
        (sample.script_id, prob, int(prob >= threshold))
        for sample, prob in zip(samples, probs)
    ]


def write_predictions_csv(rows: Sequence[tuple[str, float, int]], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["script_id", "probability", "label"])
        for script_id, prob, label in rows:
            writer.writerow([script_id, f"{prob:.6f}", label])
