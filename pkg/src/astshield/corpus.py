"""Labeled script corpora: sample type, manifest file format, ingestion.

A manifest is a small CSV (``path,label,family``) pointing at script
files; relative paths are resolved against the manifest's directory.
Scripts are read as bytes and decoded leniently — they are data, never
code to run.
"""

from __future__ import annotations

import codecs
import csv
from dataclasses import dataclass, field
from pathlib import Path

BENIGN = 0
MALICIOUS = 1

MANIFEST_FIELDS = ("path", "label", "family")


@dataclass(frozen=True)
class SourceScript:
    """One labeled script: raw text plus provenance."""

    id: str
    text: str
    label: int | None = None
    origin: str = ""


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    family: str = ""


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry]
    base_dir: Path = field(default_factory=Path)

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.base_dir / p


@dataclass(frozen=True)
class IngestError:
    path: str
    message: str


_BOMS = (
    (codecs.BOM_UTF8, "utf-8-sig"),
    (codecs.BOM_UTF16_LE, "utf-16-le"),
    (codecs.BOM_UTF16_BE, "utf-16-be"),
)


def decode_script_bytes(raw: bytes) -> str:
    """Decode script bytes, honouring BOMs and replacing undecodable bytes."""
    for bom, encoding in _BOMS:
        if raw.startswith(bom):
            return raw[len(bom):].decode(encoding, errors="replace")
    return raw.decode("utf-8", errors="replace")


def write_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for entry in manifest.entries:
            writer.writerow([entry.path, entry.label, entry.family])


def read_manifest(path: str | Path) -> CorpusManifest:
    path = Path(path)
    entries: list[ManifestEntry] = []
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(("path", "label")) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"manifest {path} lacks columns: {sorted(missing)}")
        for row_no, row in enumerate(reader, start=2):
            label = int(row["label"])
            if label not in (BENIGN, MALICIOUS):
                raise ValueError(f"manifest {path} line {row_no}: label must be 0 or 1, got {label}")
            entries.append(ManifestEntry(row["path"], label, (row.get("family") or "").strip()))
    return CorpusManifest(entries, base_dir=path.parent)


def ingest_corpus(manifest: CorpusManifest) -> tuple[list[SourceScript], list[IngestError]]:
    """Load every manifest entry; unreadable entries are reported, not fatal."""
    scripts: list[SourceScript] = []
    errors: list[IngestError] = []
    for entry in manifest.entries:
        target = manifest.resolve(entry)
        try:
            raw = target.read_bytes()
        except OSError as exc:
            errors.append(IngestError(str(entry.path), exc.strerror or str(exc)))
            continue
        script_id = Path(entry.path).with_suffix("").as_posix()
        scripts.append(
            SourceScript(
                id=script_id,
                text=decode_script_bytes(raw),
                label=entry.label,
                origin=str(target),
            )
        )
    return scripts, errors
