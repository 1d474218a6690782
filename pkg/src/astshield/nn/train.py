"""Training loop: adaptive-moment updates, stratified splits, early stopping.

Training is deterministic given a seed; the checkpoint returned is the
one from the best-validation-loss epoch, not the last.  Stopping rule:
after ``patience`` + 1 consecutive epochs without a validation-loss
improvement the run halts (so ``patience=1`` tolerates one bad epoch and
stops on the second).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..vocab import TokenSequence
from .backprop import TrainingDiverged, bce_from_logits, gradients
from .model import ModelConfig, ModelParams, forward_batch, init_params


@dataclass(frozen=True)
class Splits:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]


def _cum_bounds(n: int, ratios: Sequence[float]) -> tuple[int, int]:
    first = round(n * ratios[0])
    second = round(n * (ratios[0] + ratios[1]))
    return first, second


def split_traditional(
    labeled_ids: Sequence[tuple[str, int]],
    ratios: tuple[float, float, float] = (0.70, 0.15, 0.15),
    seed: int = 0,
    balance: bool = False,
) -> Splits:
    """Stratified train/validation/test split of sample ids.

    With ``balance`` the majority class is undersampled to parity before
    splitting.  Per-label boundaries use cumulative rounding so the three
    parts always partition each label's samples.
    """
    if len(labeled_ids) < 10:
        raise ValueError("need at least 10 samples to split")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    by_label: dict[int, list[str]] = {}
    for sample_id, label in labeled_ids:
        by_label.setdefault(label, []).append(sample_id)
    if len(by_label) < 2:
        raise ValueError("both labels must be present")

    rng = np.random.default_rng(seed)
    pools = {}
    for label in sorted(by_label):
        pool = list(by_label[label])
        order = rng.permutation(len(pool))
        pools[label] = [pool[i] for i in order]
    if balance:
        smallest = min(len(p) for p in pools.values())
        pools = {label: pool[:smallest] for label, pool in pools.items()}

    train: list[str] = []
    validation: list[str] = []
    test: list[str] = []
    for label in sorted(pools):
        pool = pools[label]
        a, b = _cum_bounds(len(pool), ratios)
        train.extend(pool[:a])
        validation.extend(pool[a:b])
        test.extend(pool[b:])
    return Splits(tuple(train), tuple(validation), tuple(test))


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 200
    patience: int = 5
    batch_size: int = 8
    learning_rate: float = 1e-3
    seed: int = 0
    target_train_acc: float | None = None  # optional early exit for overfit runs


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class History:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0
    stop_reason: str = ""

    @property
    def best_val_loss(self) -> float:
        return self.epochs[self.best_epoch - 1].val_loss


def write_history_csv(history: History, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        for e in history.epochs:
            writer.writerow(
                [e.epoch, f"{e.train_loss:.6f}", f"{e.train_acc:.6f}", f"{e.val_loss:.6f}", f"{e.val_acc:.6f}"]
            )


class Adam:
    """Adaptive-moment stochastic gradient descent over named tensors."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: ModelParams, grads: dict[str, np.ndarray]) -> None:
        self.step_count += 1
        t = self.step_count
        for name, tensor in params.named_tensors():
            g = grads[name]
            if name not in self._m:
                self._m[name] = np.zeros_like(tensor)
                self._v[name] = np.zeros_like(tensor)
            m = self._m[name]
            v = self._v[name]
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            tensor -= np.asarray(self.lr, dtype=tensor.dtype) * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class Batch:
    """Encoded samples ready for the model."""

    sample_ids: list[str]
    ids: np.ndarray        # (n, max_len) int32
    true_lens: np.ndarray  # (n,) int32
    labels: np.ndarray     # (n,) int8


def make_batch(samples: Sequence[tuple[str, TokenSequence, int]]) -> Batch:
    sample_ids = [s[0] for s in samples]
    ids = np.asarray([s[1].ids for s in samples], dtype=np.int32)
    lens = np.asarray([s[1].true_len for s in samples], dtype=np.int32)
    labels = np.asarray([s[2] for s in samples], dtype=np.int8)
    return Batch(sample_ids, ids, lens, labels)


def _evaluate(params: ModelParams, batch: Batch) -> tuple[float, float, np.ndarray]:
    probs, logits, _ = forward_batch(params, batch.ids, batch.true_lens, training=False)
    losses = bce_from_logits(logits, batch.labels.astype(logits.dtype))
    acc = float(np.mean((probs >= 0.5) == (batch.labels == 1)))
    return float(losses.mean()), acc, probs


def train(
    model_config: ModelConfig,
    dataset: Sequence[tuple[str, TokenSequence, int]],
    splits: Splits,
    train_config: TrainConfig,
    progress: Callable[[EpochStats], None] | None = None,
) -> tuple[ModelParams, History]:
    """Train on ``splits.train``, early-stop on ``splits.validation``.

    ``dataset`` holds (sample_id, encoded sequence, label) triples for at
    least every id named by the splits.
    """
    by_id = {s[0]: s for s in dataset}
    missing = [i for i in (*splits.train, *splits.validation) if i not in by_id]
    if missing:
        raise ValueError(f"splits name unknown sample ids: {missing[:3]}")
    train_samples = [by_id[i] for i in splits.train]
    val_samples = [by_id[i] for i in splits.validation]
    if not train_samples or not val_samples:
        raise ValueError("train and validation splits must be non-empty")

    rng = np.random.default_rng(train_config.seed)
    params = init_params(model_config, seed=train_config.seed)
    optimizer = Adam(train_config.learning_rate)
    val_batch = make_batch(val_samples)

    history = History()
    best_params = params.copy()
    best_val = np.inf
    bad_epochs = 0

    for epoch in range(1, train_config.max_epochs + 1):
        order = rng.permutation(len(train_samples))
        loss_sum = 0.0
        correct = 0
        for start in range(0, len(order), train_config.batch_size):
            chunk = [train_samples[i] for i in order[start: start + train_config.batch_size]]
            batch = make_batch(chunk)
            try:
                loss, grads = gradients(
                    params, batch.ids, batch.true_lens, batch.labels,
                    training=True, rng=rng, sample_ids=batch.sample_ids,
                )
            except TrainingDiverged as exc:
                exc.epoch = epoch
                raise
            optimizer.step(params, grads)
            loss_sum += loss * len(chunk)
            probs, _, _ = forward_batch(params, batch.ids, batch.true_lens, training=False)
            correct += int(np.sum((probs >= 0.5) == (batch.labels == 1)))
        train_loss = loss_sum / len(train_samples)
        train_acc = correct / len(train_samples)
        val_loss, val_acc, _ = _evaluate(params, val_batch)
        if not np.isfinite(val_loss) or not np.isfinite(train_loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}", epoch=epoch)

        stats = EpochStats(epoch, train_loss, train_acc, val_loss, val_acc)
        history.epochs.append(stats)
        if progress is not None:
            progress(stats)

        if val_loss < best_val:
            best_val = val_loss
            best_params = params.copy()
            history.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1

        history.stopped_epoch = epoch
        if train_config.target_train_acc is not None and train_acc >= train_config.target_train_acc:
            history.stop_reason = "target-train-accuracy"
            break
        if bad_epochs > train_config.patience:
            history.stop_reason = "early-stopping"
            break
    else:
        history.stop_reason = "max-epochs"

    return best_params, history
