"""Frequency-capped vocabulary and fixed-length id encoding.

Tokens for the AST route are composite ``asttype:word`` strings taken
from leaf pairs only (interior nodes repeat their subtree's text and
would double-count).  The raw route just lowercases and
whitespace-splits script text.  Id 0 is padding, id 1 is out-of-
vocabulary; real tokens start at 2, densely, in rank order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from collections import Counter
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import SourceScript
from .pipeline import PipelineRecord

PAD_ID = 0
OOV_ID = 1

DEFAULT_CAP = 6000
DEFAULT_MAX_LEN = 400

_VOCAB_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Vocabulary:
    token_to_id: dict[str, int]
    cap: int
    stoplist: frozenset[str] = frozenset()
    stoplist_hash: str = ""

    def __post_init__(self):
        if len(self.token_to_id) > self.cap:
            raise ValueError(f"vocabulary size {len(self.token_to_id)} exceeds cap {self.cap}")
        ids = sorted(self.token_to_id.values())
        if ids and (ids[0] < 2 or ids != list(range(2, 2 + len(ids)))):
            raise ValueError("token ids must be dense in [2, 2+size)")
        for token in self.stoplist:
            if token in self.token_to_id:
                raise ValueError(f"stoplist token {token!r} has an id")

    def __len__(self) -> int:
        return len(self.token_to_id)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, OOV_ID)

    def ranked_tokens(self) -> list[str]:
        return sorted(self.token_to_id, key=self.token_to_id.__getitem__)


@dataclass(frozen=True)
class TokenSequence:
    """Ids right-padded with 0 to a fixed length; ``true_len`` is pre-padding."""

    ids: tuple[int, ...]
    true_len: int

    def __post_init__(self):
        if any(i != PAD_ID for i in self.ids[self.true_len:]):
            raise ValueError("non-padding id after true_len")


def stoplist_digest(stoplist: Iterable[str]) -> str:
    payload = "\n".join(sorted(stoplist)).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def load_stoplist(path: str | Path) -> frozenset[str]:
    entries = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.add(line.lower())
    return frozenset(entries)


def default_stoplist() -> frozenset[str]:
    """The bundled list of everyday administration cmdlet words."""
    text = resources.files("astshield").joinpath("data/stoplist.txt").read_text(encoding="utf-8")
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    )


def record_tokens(record: PipelineRecord) -> list[str]:
    """Composite ``asttype:word`` tokens from the record's leaf pairs."""
    tokens: list[str] = []
    pairs = record.pairs
    for i, pair in enumerate(pairs):
        is_leaf = i + 1 == len(pairs) or pairs[i + 1].depth <= pair.depth
        if not is_leaf:
            continue
        prefix = pair.ast_type.lower()
        for word in pair.text.split():
            tokens.append(f"{prefix}:{word.lower()}")
    return tokens


def raw_tokens(text: str) -> list[str]:
    return [word.lower() for word in text.split()]


def _stopped(token: str, stoplist: frozenset[str]) -> bool:
    if token in stoplist:
        return True
    if ":" in token:
        return token.split(":", 1)[1] in stoplist
    return False


def build_vocab(
    token_streams: Iterable[Sequence[str]],
    cap: int = DEFAULT_CAP,
    stoplist: frozenset[str] = frozenset(),
) -> Vocabulary:
    """Rank tokens by corpus frequency (ties lexicographic) and keep the top ``cap``."""
    counts: Counter[str] = Counter()
    streams = 0
    for stream in token_streams:
        streams += 1
        counts.update(stream)
    if streams == 0:
        raise ValueError("cannot build a vocabulary from an empty record set")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    token_to_id: dict[str, int] = {}
    next_id = 2
    for token, _ in ranked:
        if len(token_to_id) >= cap:
            break
        if _stopped(token, stoplist):
            continue
        token_to_id[token] = next_id
        next_id += 1
    return Vocabulary(token_to_id, cap, stoplist, stoplist_digest(stoplist))


def vocab_from_records(
    records: Sequence[PipelineRecord],
    cap: int = DEFAULT_CAP,
    stoplist: frozenset[str] = frozenset(),
) -> Vocabulary:
    return build_vocab((record_tokens(r) for r in records), cap, stoplist)


def vocab_from_scripts(
    scripts: Sequence[SourceScript],
    cap: int = DEFAULT_CAP,
    stoplist: frozenset[str] = frozenset(),
) -> Vocabulary:
    return build_vocab((raw_tokens(s.text) for s in scripts), cap, stoplist)


def encode_tokens(tokens: Sequence[str], vocab: Vocabulary, max_len: int = DEFAULT_MAX_LEN) -> TokenSequence:
    """Map tokens to ids, truncate to ``max_len`` (head kept), right-pad with 0."""
    kept = tokens[:max_len]
    ids = [vocab.id_of(t) for t in kept]
    ids.extend([PAD_ID] * (max_len - len(ids)))
    return TokenSequence(tuple(ids), len(kept))


def encode(record: PipelineRecord, vocab: Vocabulary, max_len: int = DEFAULT_MAX_LEN) -> TokenSequence:
    return encode_tokens(record_tokens(record), vocab, max_len)


def encode_raw(script: SourceScript, vocab: Vocabulary, max_len: int = DEFAULT_MAX_LEN) -> TokenSequence:
    return encode_tokens(raw_tokens(script.text), vocab, max_len)


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Persist as a text file: one JSON header line, then tokens in rank order."""
    header = {
        "version": _VOCAB_FORMAT_VERSION,
        "cap": vocab.cap,
        "stoplist_sha256": vocab.stoplist_hash,
        "size": len(vocab),
    }
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for token in vocab.ranked_tokens():
            fh.write(token + "\n")


def load_vocabulary(path: str | Path) -> Vocabulary:
    with Path(path).open("r", encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad vocabulary header: {exc}") from None
        if header.get("version") != _VOCAB_FORMAT_VERSION:
            raise ValueError(f"unsupported vocabulary version {header.get('version')!r}")
        tokens = [line.rstrip("\n") for line in fh if line.strip()]
    if len(tokens) != header["size"]:
        raise ValueError(f"vocabulary lists {len(tokens)} tokens, header says {header['size']}")
    if len(set(tokens)) != len(tokens):
        raise ValueError("duplicate tokens in vocabulary file")
    token_to_id = {token: i + 2 for i, token in enumerate(tokens)}
    return Vocabulary(token_to_id, header["cap"], frozenset(), header.get("stoplist_sha256", ""))
