import re

import pytest

from astshield.ast_nodes import AstKind
from astshield.parser import parse_text
from astshield.synth import GeneratorSpec, generate, write_corpus
from astshield.corpus import read_manifest

BLOB_RE = re.compile(r"[A-Za-z0-9+/=]{256,}")


def test_same_spec_same_bytes():
    spec = GeneratorSpec(seed=7, n_benign=20, n_malicious=20, obfuscation=0.5)
    first = generate(spec)
    second = generate(spec)
    assert first == second
    assert [s.text for s in first] == [s.text for s in second]


def test_label_counts_match_spec():
    scripts = generate(GeneratorSpec(seed=1, n_benign=7, n_malicious=13, obfuscation=0.0))
    assert sum(1 for s in scripts if s.label == 0) == 7
    assert sum(1 for s in scripts if s.label == 1) == 13


def test_empty_spec_gives_empty_corpus():
    assert generate(GeneratorSpec(seed=1, n_benign=0, n_malicious=0, obfuscation=0.0)) == []


def test_invalid_spec_rejected():
    with pytest.raises(ValueError):
        GeneratorSpec(seed=1, n_benign=-1, n_malicious=0)
    with pytest.raises(ValueError):
        GeneratorSpec(seed=1, n_benign=1, n_malicious=1, obfuscation=1.5)


def test_full_intensity_embeds_large_base64_blobs():
    scripts = generate(GeneratorSpec(seed=3, n_benign=0, n_malicious=24, obfuscation=1.0))
    for script in scripts:
        assert BLOB_RE.search(script.text), script.id


def test_clean_corpus_parses_without_error_nodes():
    scripts = generate(GeneratorSpec(seed=5, n_benign=24, n_malicious=24, obfuscation=0.0))
    for script in scripts:
        tree = parse_text(script.text)
        errors = [n for n in tree.walk() if n.kind is AstKind.ERROR]
        assert not errors, f"{script.id} ({script.origin}): {errors[0].text if errors else ''}"


def test_payloads_are_inert():
    scripts = generate(GeneratorSpec(seed=9, n_benign=0, n_malicious=24, obfuscation=1.0))
    for script in scripts:
        for url in re.findall(r"https?://([^/'\s:]+)", script.text):
            assert (
                url.endswith((".example.com", ".example.net", ".example.org", ".invalid", ".test"))
                or url.startswith(("203.0.113.", "198.51.100."))
            ), url


def test_template_variety():
    scripts = generate(GeneratorSpec(seed=2, n_benign=20, n_malicious=20, obfuscation=0.5))
    assert len({s.origin for s in scripts if s.label == 1}) >= 10
    assert len({s.origin for s in scripts if s.label == 0}) >= 10
    # randomized identifiers: no single text repeated
    texts = [s.text for s in scripts]
    assert len(set(texts)) == len(texts)


def test_write_corpus_produces_manifest(tmp_path):
    spec = GeneratorSpec(seed=4, n_benign=3, n_malicious=2, obfuscation=0.5)
    manifest, scripts = write_corpus(spec, tmp_path)
    assert len(manifest.entries) == 5
    back = read_manifest(tmp_path / "manifest.csv")
    assert [e.label for e in back.entries] == [0, 0, 0, 1, 1]
    for entry in back.entries:
        assert (tmp_path / entry.path).is_file()
        assert entry.family
