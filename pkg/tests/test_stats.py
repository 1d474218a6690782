import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from astshield.corpus import SourceScript
from astshield.stats import (
    corpus_report,
    format_report,
    script_stats,
    shannon_entropy,
    write_report_csv,
    write_stats_csv,
)
from astshield.synth import GeneratorSpec, generate


def test_entropy_single_symbol_is_zero():
    assert shannon_entropy(b"aaaa") == 0.0


def test_entropy_two_equiprobable_symbols():
    assert shannon_entropy(b"ab") == pytest.approx(1.0)


def test_entropy_four_equiprobable_symbols():
    assert shannon_entropy(b"abcd") == pytest.approx(2.0)


def test_entropy_empty_is_an_error():
    with pytest.raises(ValueError):
        shannon_entropy(b"")


@given(st.binary(min_size=1, max_size=300))
@settings(max_examples=300, deadline=None)
def test_entropy_bounds(data):
    h = shannon_entropy(data)
    assert 0.0 <= h <= 8.0 + 1e-12


@given(st.binary(min_size=2, max_size=200), st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_entropy_permutation_invariant(data, seed):
    shuffled = bytearray(data)
    random.Random(seed).shuffle(shuffled)
    assert shannon_entropy(bytes(shuffled)) == pytest.approx(shannon_entropy(data))


def test_script_stats_lines_and_size():
    s = script_stats(SourceScript(id="x", text="a\nbb\n", label=0))
    assert s.byte_size == 5
    assert s.line_count == 2
    assert s.label == 0


def test_report_counts_sum_to_corpus_size():
    samples = [
        SourceScript(id="b1", text="ping a", label=0),
        SourceScript(id="b2", text="ping b", label=0),
        SourceScript(id="m1", text="IEX x", label=1),
        SourceScript(id="m2", text="IEX y", label=1),
    ]
    report = corpus_report(samples)
    assert report.total == 4
    assert {s.label: s.count for s in report.per_label} == {0: 2, 1: 2}
    assert sum(s.count for s in report.per_label) == report.total


def test_single_label_corpus_reports_one_section():
    samples = [SourceScript(id="b", text="ping", label=0)]
    report = corpus_report(samples)
    assert len(report.per_label) == 1
    assert report.per_label[0].label == 0


def test_empty_corpus_is_an_error():
    with pytest.raises(ValueError):
        corpus_report([])


def test_obfuscated_malicious_class_has_higher_entropy():
    scripts = generate(GeneratorSpec(seed=11, n_benign=20, n_malicious=20, obfuscation=1.0))
    report = corpus_report(scripts)
    by_label = {s.label: s for s in report.per_label}
    assert by_label[1].entropy_mean > by_label[0].entropy_mean


def test_line_histogram_buckets(tmp_path):
    long_text = "\n".join(["ping a"] * 1500)
    samples = [
        SourceScript(id="short", text="ping a", label=0),
        SourceScript(id="mid", text="\n".join(["ping a"] * 250), label=0),
        SourceScript(id="long", text=long_text, label=0),
    ]
    report = corpus_report(samples)
    hist = report.per_label[0].line_histogram
    assert len(hist) == 11
    assert hist[0] == 1      # 1 line
    assert hist[2] == 1      # 250 lines -> [200, 300)
    assert hist[10] == 1     # overflow bucket
    write_stats_csv(samples, tmp_path / "stats.csv")
    write_report_csv(report, tmp_path / "summary.csv", tmp_path / "hist.csv")
    hist_lines = (tmp_path / "hist.csv").read_text().splitlines()
    assert hist_lines[0] == "label,lines_lo,lines_hi,count"
    assert len(hist_lines) == 1 + 11


def test_format_report_mentions_both_labels(tiny_corpus):
    block = format_report(corpus_report(tiny_corpus))
    assert "benign" in block and "malicious" in block
