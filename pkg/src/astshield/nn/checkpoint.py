"""Checkpoint files: a versioned container of named float32 tensors.

Layout (all integers little-endian):

    magic   8 bytes  b"ASHCKPT\\0"
    version u32
    config  u32 length + UTF-8 JSON of the model config
    count   u32 number of tensors
    tensor  u32 name length + name, u32 ndim, u64 * ndim dims,
            raw little-endian float32 data

The format has no timestamps, so identical models produce identical
bytes, and loading restores a model whose outputs are bit-identical to
the saved one.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .model import LstmCellParams, ModelConfig, ModelParams

MAGIC = b"ASHCKPT\0"
FORMAT_VERSION = 1


def save_checkpoint(params: ModelParams, path: str | Path) -> None:
    tensors = list(params.named_tensors())
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        config_blob = params.config.to_json().encode("utf-8")
        fh.write(struct.pack("<I", len(config_blob)))
        fh.write(config_blob)
        fh.write(struct.pack("<I", len(tensors)))
        for name, tensor in tensors:
            blob = name.encode("utf-8")
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(struct.pack("<I", tensor.ndim))
            for dim in tensor.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(np.asarray(tensor, dtype="<f4").tobytes(order="C"))


def _read_exact(fh, n: int) -> bytes:
    blob = fh.read(n)
    if len(blob) != n:
        raise ValueError("checkpoint file is truncated")
    return blob


def _expected_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {
        "embedding": (config.embedding_rows, config.embed_dim),
        "dense.w": (config.dense_dim, config.lstm_out_dim),
        "dense.b": (config.dense_dim,),
        "out.w": (config.dense_dim,),
        "out.b": (),
    }
    prefixes = ("fwd", "bwd") if config.bidirectional else ("fwd",)
    for prefix in prefixes:
        for gate in "igfo":
            shapes[f"{prefix}.W_x{gate}"] = (config.hidden_dim, config.embed_dim)
            shapes[f"{prefix}.U_h{gate}"] = (config.hidden_dim, config.hidden_dim)
            shapes[f"{prefix}.b_{gate}"] = (config.hidden_dim,)
    return shapes


def load_checkpoint(path: str | Path) -> ModelParams:
    with Path(path).open("rb") as fh:
        if _read_exact(fh, len(MAGIC)) != MAGIC:
            raise ValueError(f"{path} is not a checkpoint file")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {version}")
        (config_len,) = struct.unpack("<I", _read_exact(fh, 4))
        config = ModelConfig.from_json(_read_exact(fh, config_len).decode("utf-8"))
        (count,) = struct.unpack("<I", _read_exact(fh, 4))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read_exact(fh, 4))
            name = _read_exact(fh, name_len).decode("utf-8")
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4))
            shape = tuple(struct.unpack("<Q", _read_exact(fh, 8))[0] for _ in range(ndim))
            size = int(np.prod(shape, dtype=np.int64)) if shape else 1
            data = np.frombuffer(_read_exact(fh, size * 4), dtype="<f4").reshape(shape)
            tensors[name] = data.astype(np.float32).copy()

    expected = _expected_shapes(config)
    for name, shape in expected.items():
        if name not in tensors:
            raise ValueError(f"checkpoint is missing tensor {name!r}")
        if tensors[name].shape != shape:
            raise ValueError(f"tensor {name!r} has shape {tensors[name].shape}, expected {shape}")

    def cell(prefix: str) -> LstmCellParams:
        return LstmCellParams(**{n: tensors[f"{prefix}.{n}"] for n in LstmCellParams.FIELD_NAMES})

    return ModelParams(
        config=config,
        embedding=tensors["embedding"],
        fwd=cell("fwd"),
        bwd=cell("bwd") if config.bidirectional else None,
        dense_w=tensors["dense.w"],
        dense_b=tensors["dense.b"],
        out_w=tensors["out.w"],
        out_b=tensors["out.b"],
    )
