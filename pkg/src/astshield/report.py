"""Rendering of training curves, corpus histograms and model comparisons.

Figures are written as PNG next to the delimited outputs they visualize;
nothing here recomputes metrics, it only draws what the CSV artifacts
already say.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import Metrics

_LABEL_NAMES = {0: "benign", 1: "malicious"}
_LABEL_COLORS = {0: "#2a7fba", 1: "#c0392b"}


def read_history_csv(path: str | Path) -> dict[str, list[float]]:
    columns: dict[str, list[float]] = {
        "epoch": [], "train_loss": [], "train_acc": [], "val_loss": [], "val_acc": []
    }
    with Path(path).open("r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            for key in columns:
                columns[key].append(float(row[key]))
    return columns


def plot_history(history_csv: str | Path, out_png: str | Path, title: str = "") -> Path:
    """Two panels: loss and accuracy over epochs, training vs validation."""
    cols = read_history_csv(history_csv)
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))
    ax_loss.plot(cols["epoch"], cols["train_loss"], label="training", color="#2a7fba")
    ax_loss.plot(cols["epoch"], cols["val_loss"], label="validation", color="#c0392b")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()
    ax_acc.plot(cols["epoch"], cols["train_acc"], label="training", color="#2a7fba")
    ax_acc.plot(cols["epoch"], cols["val_acc"], label="validation", color="#c0392b")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.05)
    ax_acc.legend()
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    out = Path(out_png)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_comparison(rows: Sequence[tuple[str, Metrics]], out_png: str | Path) -> Path:
    """Grouped bars: accuracy/precision/recall/F1 per model."""
    attrs = ("accuracy", "precision", "recall", "f1")
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * max(1, len(rows)), 4.2))
    width = 0.2
    for j, attr in enumerate(attrs):
        xs, ys = [], []
        for i, (_, m) in enumerate(rows):
            value = getattr(m, attr)
            if value is not None:
                xs.append(i + (j - 1.5) * width)
                ys.append(value)
        ax.bar(xs, ys, width=width, label=attr)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels([name for name, _ in rows], rotation=20, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.legend(ncols=4, fontsize="small")
    fig.tight_layout()
    out = Path(out_png)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def read_script_stats_csv(path: str | Path) -> list[dict]:
    rows = []
    with Path(path).open("r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                {
                    "script_id": row["script_id"],
                    "label": int(row["label"]),
                    "byte_size": int(row["byte_size"]),
                    "line_count": int(row["line_count"]),
                    "entropy": float(row["entropy"]),
                }
            )
    return rows


def plot_entropy_hist(stats_rows: Sequence[dict], out_png: str | Path, bins: int = 24) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label in sorted({r["label"] for r in stats_rows}):
        values = [r["entropy"] for r in stats_rows if r["label"] == label]
        ax.hist(
            values, bins=bins, range=(0.0, 8.0), alpha=0.55,
            label=_LABEL_NAMES.get(label, str(label)), color=_LABEL_COLORS.get(label),
        )
    ax.set_xlabel("entropy (bits/byte)")
    ax.set_ylabel("scripts")
    ax.legend()
    fig.tight_layout()
    out = Path(out_png)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_line_count_hist(stats_rows: Sequence[dict], out_png: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    upper = max((r["line_count"] for r in stats_rows), default=1)
    for label in sorted({r["label"] for r in stats_rows}):
        values = [r["line_count"] for r in stats_rows if r["label"] == label]
        ax.hist(
            values, bins=min(20, max(upper, 2)), alpha=0.55,
            label=_LABEL_NAMES.get(label, str(label)), color=_LABEL_COLORS.get(label),
        )
    ax.set_xlabel("lines")
    ax.set_ylabel("scripts")
    ax.legend()
    fig.tight_layout()
    out = Path(out_png)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
