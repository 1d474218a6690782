"""Readers for the two input contracts: pipeline JSONL and corpus manifest.

JSONL: one object per line with ``script_id``, ``label`` (0/1) and
``pairs`` = list of ``{t, x, d}``. Manifest: CSV with ``path,label,family``
rows, paths relative to the manifest. Violations raise
:class:`DataContractError` naming the offending line.
"""

from __future__ import annotations

import codecs
import csv
import json
from dataclasses import dataclass
from pathlib import Path


class DataContractError(ValueError):
    def __init__(self, source: str, line: int, message: str):
        super().__init__(f"{source} line {line}: {message}")
        self.source = source
        self.line = line


@dataclass(frozen=True)
class Sample:
    script_id: str
    label: int
    text: str


def serialize_pairs(pairs: list[dict]) -> str:
    """One ``TYPE:text`` line per pair — the transformer's input view."""
    return "\n".join(f"{p['t']}:{p['x']}" for p in pairs)


def load_jsonl_samples(path: str | Path) -> list[Sample]:
    path = Path(path)
    samples: list[Sample] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise DataContractError(path.name, line_no, f"not valid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise DataContractError(path.name, line_no, "record is not an object")
            for field in ("script_id", "label", "pairs"):
                if field not in obj:
                    raise DataContractError(path.name, line_no, f"missing field {field!r}")
            if obj["label"] not in (0, 1):
                raise DataContractError(path.name, line_no, f"label must be 0 or 1, got {obj['label']!r}")
            pairs = obj["pairs"]
            if not isinstance(pairs, list) or any(
                not isinstance(p, dict) or not {"t", "x", "d"} <= set(p) for p in pairs
            ):
                raise DataContractError(path.name, line_no, "pairs must be [{t, x, d}, ...]")
            samples.append(Sample(str(obj["script_id"]), int(obj["label"]), serialize_pairs(pairs)))
    return samples


_BOMS = (
    (codecs.BOM_UTF8, "utf-8-sig"),
    (codecs.BOM_UTF16_LE, "utf-16-le"),
    (codecs.BOM_UTF16_BE, "utf-16-be"),
)


def _decode(raw: bytes) -> str:
    for bom, encoding in _BOMS:
        if raw.startswith(bom):
            return raw[len(bom):].decode(encoding, errors="replace")
    return raw.decode("utf-8", errors="replace")


def load_manifest_samples(path: str | Path) -> list[Sample]:
    """Raw-text samples for the non-AST baseline."""
    path = Path(path)
    samples: list[Sample] = []
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"path", "label"} <= set(reader.fieldnames):
            raise DataContractError(path.name, 1, "manifest needs path,label columns")
        for line_no, row in enumerate(reader, start=2):
            try:
                label = int(row["label"])
            except (TypeError, ValueError):
                raise DataContractError(path.name, line_no, f"bad label {row.get('label')!r}") from None
            if label not in (0, 1):
                raise DataContractError(path.name, line_no, f"label must be 0 or 1, got {label}")
            target = Path(row["path"])
            if not target.is_absolute():
                target = path.parent / target
            try:
                raw = target.read_bytes()
            except OSError as exc:
                raise DataContractError(path.name, line_no, f"cannot read {row['path']}: {exc.strerror}") from None
            script_id = Path(row["path"]).with_suffix("").as_posix()
            samples.append(Sample(script_id, label, _decode(raw)))
    return samples
