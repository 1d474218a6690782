"""Descriptive corpus statistics: entropy, sizes, line counts.

Entropy is Shannon entropy over raw bytes (bits per byte, 0..8), a cheap
obfuscation signal: base64 blobs and packed payloads push it up.
"""

from __future__ import annotations

import csv
import math
import statistics
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import SourceScript

# line-count histogram: buckets of 100 up to 1000, then a single overflow bucket
HIST_BUCKET_WIDTH = 100
HIST_BUCKET_LIMIT = 1000


def shannon_entropy(data: bytes) -> float:
    """Bits per byte: -sum(p * log2 p) over byte frequencies."""
    if not data:
        raise ValueError("entropy of empty input is undefined")
    counts = Counter(data)
    n = len(data)
    return -sum((c / n) * math.log2(c / n) for c in counts.values())


@dataclass(frozen=True)
class ScriptStats:
    script_id: str
    byte_size: int
    line_count: int
    entropy: float
    label: int | None


@dataclass(frozen=True)
class LabelSummary:
    label: int
    count: int
    median_byte_size: float
    entropy_mean: float
    entropy_std: float
    line_histogram: tuple[int, ...]  # buckets [0,100), ..., [900,1000), [1000,inf)


@dataclass(frozen=True)
class CorpusReport:
    per_label: tuple[LabelSummary, ...]
    total: int


def script_stats(script: SourceScript) -> ScriptStats:
    raw = script.text.encode("utf-8")
    lines = len(script.text.splitlines()) if script.text else 0
    entropy = shannon_entropy(raw) if raw else 0.0
    return ScriptStats(script.id, len(raw), lines, entropy, script.label)


def _bucket_index(line_count: int) -> int:
    if line_count >= HIST_BUCKET_LIMIT:
        return HIST_BUCKET_LIMIT // HIST_BUCKET_WIDTH
    return line_count // HIST_BUCKET_WIDTH


def corpus_report(samples: Sequence[SourceScript]) -> CorpusReport:
    if not samples:
        raise ValueError("cannot report on an empty corpus")
    by_label: dict[int, list[ScriptStats]] = {}
    for script in samples:
        if script.label is None:
            raise ValueError(f"script {script.id!r} has no label")
        by_label.setdefault(script.label, []).append(script_stats(script))

    summaries = []
    n_buckets = HIST_BUCKET_LIMIT // HIST_BUCKET_WIDTH + 1
    for label in sorted(by_label):
        stats = by_label[label]
        entropies = [s.entropy for s in stats]
        hist = [0] * n_buckets
        for s in stats:
            hist[_bucket_index(s.line_count)] += 1
        summaries.append(
            LabelSummary(
                label=label,
                count=len(stats),
                median_byte_size=statistics.median(s.byte_size for s in stats),
                entropy_mean=statistics.fmean(entropies),
                entropy_std=statistics.pstdev(entropies),
                line_histogram=tuple(hist),
            )
        )
    return CorpusReport(tuple(summaries), total=len(samples))


def write_stats_csv(samples: Sequence[SourceScript], path: str | Path) -> None:
    """Per-script rows: script_id, label, byte_size, line_count, entropy."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["script_id", "label", "byte_size", "line_count", "entropy"])
        for script in samples:
            s = script_stats(script)
            writer.writerow([s.script_id, s.label, s.byte_size, s.line_count, f"{s.entropy:.6f}"])


def write_report_csv(report: CorpusReport, summary_path: str | Path, hist_path: str | Path) -> None:
    with Path(summary_path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "count", "median_byte_size", "entropy_mean", "entropy_std"])
        for s in report.per_label:
            writer.writerow(
                [s.label, s.count, s.median_byte_size, f"{s.entropy_mean:.6f}", f"{s.entropy_std:.6f}"]
            )
    with Path(hist_path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "lines_lo", "lines_hi", "count"])
        for s in report.per_label:
            for i, count in enumerate(s.line_histogram):
                lo = i * HIST_BUCKET_WIDTH
                hi = "" if lo >= HIST_BUCKET_LIMIT else lo + HIST_BUCKET_WIDTH
                writer.writerow([s.label, lo, hi, count])


def format_report(report: CorpusReport) -> str:
    """Human-readable summary block."""
    lines = [f"corpus: {report.total} scripts"]
    for s in report.per_label:
        name = "malicious" if s.label == 1 else "benign"
        lines.append(
            f"  label {s.label} ({name}): n={s.count}"
            f" median_bytes={s.median_byte_size:.0f}"
            f" entropy={s.entropy_mean:.3f}±{s.entropy_std:.3f}"
        )
    return "\n".join(lines)
