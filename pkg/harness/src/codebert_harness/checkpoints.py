"""Locating the pretrained base checkpoint.

The fine-tuning base is a 12-layer, 12-head, hidden-size-768 bimodal code
transformer (a CodeBERT-class RoBERTa checkpoint). It must exist locally;
nothing here downloads models.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

ENV_VAR = "CODEBERT_CHECKPOINT"
DEFAULT_DIRS = ("checkpoints/codebert-base", "~/.cache/codebert-base")

EXPECTED_LAYERS = 12
EXPECTED_HEADS = 12
EXPECTED_HIDDEN = 768

FETCH_INSTRUCTIONS = f"""\
no pretrained base checkpoint found.

Provide a local RoBERTa-class checkpoint directory (config.json + weights +
tokenizer files), e.g. on a machine with internet access:

    pip install -U "huggingface_hub[cli]"
    hf download microsoft/codebert-base --local-dir checkpoints/codebert-base

then point the harness at it with --checkpoint PATH or:

    export {ENV_VAR}=/path/to/checkpoints/codebert-base
"""


class CheckpointNotFound(FileNotFoundError):
    pass


def _looks_like_checkpoint(path: Path) -> bool:
    return path.is_dir() and (path / "config.json").is_file()


def resolve_checkpoint(explicit: str | None = None) -> Path:
    """Explicit path, then $CODEBERT_CHECKPOINT, then the default dirs."""
    candidates: list[Path] = []
    if explicit:
        candidates.append(Path(explicit).expanduser())
    env = os.environ.get(ENV_VAR)
    if env:
        candidates.append(Path(env).expanduser())
    candidates.extend(Path(d).expanduser() for d in DEFAULT_DIRS)

    for candidate in candidates:
        if _looks_like_checkpoint(candidate):
            return candidate
    tried = "\n".join(f"  - {c}" for c in candidates) or "  (none)"
    raise CheckpointNotFound(f"{FETCH_INSTRUCTIONS}\nLocations tried:\n{tried}")


def checkpoint_architecture(path: Path) -> tuple[int, int, int]:
    """(layers, heads, hidden size) from the checkpoint config."""
    config = json.loads((Path(path) / "config.json").read_text(encoding="utf-8"))
    return (
        int(config.get("num_hidden_layers", 0)),
        int(config.get("num_attention_heads", 0)),
        int(config.get("hidden_size", 0)),
    )


def is_full_size(path: Path) -> bool:
    return checkpoint_architecture(path) == (EXPECTED_LAYERS, EXPECTED_HEADS, EXPECTED_HIDDEN)
