import pytest

from astshield.corpus import (
    CorpusManifest,
    ManifestEntry,
    decode_script_bytes,
    ingest_corpus,
    read_manifest,
    write_manifest,
)
from astshield.synth import GeneratorSpec, write_corpus


def test_manifest_roundtrip(tmp_path):
    entries = [
        ManifestEntry("a.ps1", 1, "cradle"),
        ManifestEntry("sub/b.ps1", 0, ""),
    ]
    path = tmp_path / "manifest.csv"
    write_manifest(CorpusManifest(entries, base_dir=tmp_path), path)
    back = read_manifest(path)
    assert back.entries == entries
    assert back.base_dir == tmp_path


def test_manifest_rejects_bad_label(tmp_path):
    path = tmp_path / "manifest.csv"
    path.write_text("path,label,family\nx.ps1,2,\n", encoding="utf-8")
    with pytest.raises(ValueError, match="label"):
        read_manifest(path)


def test_ingest_two_files(tmp_path):
    (tmp_path / "m.ps1").write_text("IEX x", encoding="utf-8")
    (tmp_path / "b.ps1").write_text("ping a", encoding="utf-8")
    manifest = CorpusManifest(
        [ManifestEntry("m.ps1", 1), ManifestEntry("b.ps1", 0)], base_dir=tmp_path
    )
    scripts, errors = ingest_corpus(manifest)
    assert not errors
    assert [s.label for s in scripts] == [1, 0]
    assert scripts[0].text == "IEX x"


def test_ingest_continues_past_missing_path(tmp_path):
    (tmp_path / "a.ps1").write_text("ping a", encoding="utf-8")
    (tmp_path / "c.ps1").write_text("ping c", encoding="utf-8")
    manifest = CorpusManifest(
        [
            ManifestEntry("a.ps1", 0),
            ManifestEntry("missing.ps1", 1),
            ManifestEntry("c.ps1", 0),
        ],
        base_dir=tmp_path,
    )
    scripts, errors = ingest_corpus(manifest)
    assert len(scripts) == 2
    assert len(errors) == 1
    assert errors[0].path == "missing.ps1"


def test_ingest_generated_corpus(tmp_path):
    spec = GeneratorSpec(seed=7, n_benign=20, n_malicious=20, obfuscation=0.5)
    manifest, _ = write_corpus(spec, tmp_path / "corpus")
    scripts, errors = ingest_corpus(manifest)
    assert not errors
    assert len(scripts) == 40
    assert sum(1 for s in scripts if s.label == 0) == 20
    assert sum(1 for s in scripts if s.label == 1) == 20
    ids = [s.id for s in scripts]
    assert len(set(ids)) == len(ids)


def test_decode_handles_boms_and_garbage():
    assert decode_script_bytes("ping".encode("utf-8")) == "ping"
    assert decode_script_bytes(b"\xef\xbb\xbfping") == "ping"
    assert decode_script_bytes(b"\xff\xfe" + "ping".encode("utf-16-le")) == "ping"
    decoded = decode_script_bytes(b"ping \xff\xfe\xfa junk")
    assert "ping" in decoded and "junk" in decoded
    assert "\ufffd" in decoded


def test_scripts_are_never_executed(tmp_path):
    # ingestion must treat even hostile-looking text as plain data
    evil = tmp_path / "evil.ps1"
    evil.write_text("Remove-Item -Recurse C:\\; __import__('os').system('true')", encoding="utf-8")
    manifest = CorpusManifest([ManifestEntry("evil.ps1", 1)], base_dir=tmp_path)
    scripts, errors = ingest_corpus(manifest)
    assert not errors
    assert "Remove-Item" in scripts[0].text
