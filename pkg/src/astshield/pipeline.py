"""Linearized AST records and the JSONL file format they travel in.

Each script becomes one record: a pre-order walk of its tree as
``(ast_type, text, depth)`` pairs, with the root excluded and direct
children of the root at depth 0.  The wire format is one JSON object per
line with fixed field names ``script_id``, ``label`` and
``pairs`` (``[{t, x, d}, ...]``) — the contract consumed by downstream
tooling, including the transformer fine-tuning harness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .ast_nodes import KIND_NAMES, AstKind, AstNode, collapse_ws


@dataclass(frozen=True)
class PipelinePair:
    ast_type: str
    text: str
    depth: int


@dataclass(frozen=True)
class PipelineRecord:
    script_id: str
    label: int
    pairs: tuple[PipelinePair, ...]


@dataclass(frozen=True)
class JsonlError:
    line: int
    message: str


@dataclass
class JsonlReadResult:
    records: list[PipelineRecord]
    errors: list[JsonlError] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.errors)


def linearize(root: AstNode, script_id: str, label: int) -> PipelineRecord:
    """Flatten a tree into one record; the root itself emits no pair."""
    if root.kind is not AstKind.SCRIPT_ROOT:
        raise ValueError(f"linearize expects a ScriptRoot, got {root.kind.value}")
    pairs: list[PipelinePair] = []

    def visit(node: AstNode, depth: int) -> None:
        pairs.append(PipelinePair(node.kind.value, collapse_ws(node.text), depth))
        for child in node.children:
            visit(child, depth + 1)

    for child in root.children:
        visit(child, 0)
    return PipelineRecord(script_id, label, tuple(pairs))


def _record_to_obj(record: PipelineRecord) -> dict:
    return {
        "script_id": record.script_id,
        "label": record.label,
        "pairs": [{"t": p.ast_type, "x": p.text, "d": p.depth} for p in record.pairs],
    }


def _obj_to_record(obj: dict) -> PipelineRecord:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    try:
        script_id = obj["script_id"]
        label = obj["label"]
        raw_pairs = obj["pairs"]
    except KeyError as exc:
        raise ValueError(f"missing field {exc.args[0]!r}") from None
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    pairs = []
    for p in raw_pairs:
        ast_type = p["t"]
        if ast_type not in KIND_NAMES:
            raise ValueError(f"unknown ast type {ast_type!r}")
        depth = p["d"]
        if not isinstance(depth, int) or depth < 0:
            raise ValueError(f"bad depth {depth!r}")
        pairs.append(PipelinePair(ast_type, p["x"], depth))
    return PipelineRecord(str(script_id), label, tuple(pairs))


def write_jsonl(records: Iterable[PipelineRecord], path: str | Path) -> int:
    """Write records one per line; returns the number written."""
    count = 0
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(_record_to_obj(record), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")
            count += 1
    return count


def read_jsonl(path: str | Path) -> JsonlReadResult:
    """Read records; malformed lines are reported by number, good ones kept."""
    result = JsonlReadResult(records=[])
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
                result.records.append(_obj_to_record(obj))
            except (ValueError, KeyError, TypeError) as exc:
                result.errors.append(JsonlError(line_no, str(exc)))
    return result
