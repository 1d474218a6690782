"""Model definition and forward pass.

One LSTM step computes

    i = sigmoid(W_xi x + U_hi h_prev + b_i)
    g = tanh   (W_xg x + U_hg h_prev + b_g)
    f = sigmoid(W_xf x + U_hf h_prev + b_f)
    o = sigmoid(W_xo x + U_ho h_prev + b_o)
    c = f * c_prev + i * g
    h = tanh(c) * o

The classifier runs the recurrence over the unpadded prefix of each
sequence (padding id 0 never reaches the cell), takes the last hidden
state (both directions concatenated for the bidirectional variant), and
finishes with dropout -> dense+ReLU -> dropout -> sigmoid.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int = 6000
    embed_dim: int = 128
    hidden_dim: int = 64
    dense_dim: int = 64
    dropout_rate: float = 0.5
    bidirectional: bool = False
    max_len: int = 400

    def __post_init__(self):
        for name in ("vocab_size", "embed_dim", "hidden_dim", "dense_dim", "max_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")

    @property
    def embedding_rows(self) -> int:
        return self.vocab_size + 2  # padding and OOV rows

    @property
    def lstm_out_dim(self) -> int:
        return self.hidden_dim * (2 if self.bidirectional else 1)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, payload: str) -> "ModelConfig":
        return cls(**json.loads(payload))


@dataclass
class LstmCellParams:
    """Gate weights: input-to-gate (hidden x embed), recurrent (hidden x hidden), biases."""

    W_xi: np.ndarray
    W_xg: np.ndarray
    W_xf: np.ndarray
    W_xo: np.ndarray
    U_hi: np.ndarray
    U_hg: np.ndarray
    U_hf: np.ndarray
    U_ho: np.ndarray
    b_i: np.ndarray
    b_g: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray

    FIELD_NAMES = (
        "W_xi", "W_xg", "W_xf", "W_xo",
        "U_hi", "U_hg", "U_hf", "U_ho",
        "b_i", "b_g", "b_f", "b_o",
    )

    def named(self, prefix: str) -> Iterator[tuple[str, np.ndarray]]:
        for name in self.FIELD_NAMES:
            yield f"{prefix}.{name}", getattr(self, name)

    def validate(self, embed_dim: int, hidden_dim: int) -> None:
        shapes = {
            "W": (hidden_dim, embed_dim),
            "U": (hidden_dim, hidden_dim),
            "b": (hidden_dim,),
        }
        for name in self.FIELD_NAMES:
            want = shapes[name[0]]
            got = getattr(self, name).shape
            if got != want:
                raise ValueError(f"{name} has shape {got}, expected {want}")


@dataclass(frozen=True)
class LstmState:
    h: np.ndarray
    c: np.ndarray


@dataclass
class ModelParams:
    """Every learnable tensor, plus the config that shaped them."""

    config: ModelConfig
    embedding: np.ndarray          # (vocab_size + 2, embed_dim)
    fwd: LstmCellParams
    bwd: LstmCellParams | None
    dense_w: np.ndarray            # (dense_dim, lstm_out_dim)
    dense_b: np.ndarray            # (dense_dim,)
    out_w: np.ndarray              # (dense_dim,)
    out_b: np.ndarray              # ()

    def named_tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        yield "embedding", self.embedding
        yield from self.fwd.named("fwd")
        if self.bwd is not None:
            yield from self.bwd.named("bwd")
        yield "dense.w", self.dense_w
        yield "dense.b", self.dense_b
        yield "out.w", self.out_w
        yield "out.b", self.out_b

    def tensor_dict(self) -> dict[str, np.ndarray]:
        return dict(self.named_tensors())

    def set_tensor(self, name: str, value: np.ndarray) -> None:
        if name == "embedding":
            self.embedding = value
        elif name == "dense.w":
            self.dense_w = value
        elif name == "dense.b":
            self.dense_b = value
        elif name == "out.w":
            self.out_w = value
        elif name == "out.b":
            self.out_b = value
        elif "." in name:
            prefix, attr = name.split(".", 1)
            cell = {"fwd": self.fwd, "bwd": self.bwd}[prefix]
            if cell is None:
                raise KeyError(name)
            setattr(cell, attr, value)
        else:
            raise KeyError(name)

    def copy(self) -> "ModelParams":
        clone = ModelParams(
            config=self.config,
            embedding=self.embedding.copy(),
            fwd=replace(self.fwd, **{n: getattr(self.fwd, n).copy() for n in LstmCellParams.FIELD_NAMES}),
            bwd=None,
            dense_w=self.dense_w.copy(),
            dense_b=self.dense_b.copy(),
            out_w=self.out_w.copy(),
            out_b=self.out_b.copy(),
        )
        if self.bwd is not None:
            clone.bwd = replace(
                self.bwd, **{n: getattr(self.bwd, n).copy() for n in LstmCellParams.FIELD_NAMES}
            )
        return clone


def _init_cell(rng: np.random.Generator, embed_dim: int, hidden_dim: int, dtype) -> LstmCellParams:
    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    kwargs = {}
    for gate in "igfo":
        kwargs[f"W_x{gate}"] = uniform((hidden_dim, embed_dim), embed_dim)
        kwargs[f"U_h{gate}"] = uniform((hidden_dim, hidden_dim), hidden_dim)
        kwargs[f"b_{gate}"] = np.zeros(hidden_dim, dtype=dtype)
    kwargs["b_f"] = np.ones(hidden_dim, dtype=dtype)  # open forget gate at start
    return LstmCellParams(**kwargs)


def init_params(config: ModelConfig, seed: int, dtype=np.float32) -> ModelParams:
    """Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization."""
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    embedding = uniform((config.embedding_rows, config.embed_dim), config.embed_dim)
    embedding[0, :] = 0.0  # padding row stays zero at init
    fwd = _init_cell(rng, config.embed_dim, config.hidden_dim, dtype)
    bwd = _init_cell(rng, config.embed_dim, config.hidden_dim, dtype) if config.bidirectional else None
    return ModelParams(
        config=config,
        embedding=embedding,
        fwd=fwd,
        bwd=bwd,
        dense_w=uniform((config.dense_dim, config.lstm_out_dim), config.lstm_out_dim),
        dense_b=np.zeros(config.dense_dim, dtype=dtype),
        out_w=uniform((config.dense_dim,), config.dense_dim),
        out_b=np.zeros((), dtype=dtype),
    )


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def gate_activations(
    x: np.ndarray, prev: LstmState, p: LstmCellParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Gate values (i, g, f, o) for one step; inputs are single vectors."""
    i = sigmoid(p.W_xi @ x + p.U_hi @ prev.h + p.b_i)
    g = np.tanh(p.W_xg @ x + p.U_hg @ prev.h + p.b_g)
    f = sigmoid(p.W_xf @ x + p.U_hf @ prev.h + p.b_f)
    o = sigmoid(p.W_xo @ x + p.U_ho @ prev.h + p.b_o)
    return i, g, f, o


def lstm_step(x: np.ndarray, prev: LstmState, p: LstmCellParams) -> LstmState:
    """Advance one cell step for a single embedded token."""
    hidden = p.b_i.shape[0]
    if x.ndim != 1 or p.W_xi.shape[1] != x.shape[0]:
        raise ValueError(f"input shape {x.shape} does not match W_x* {p.W_xi.shape}")
    if prev.h.shape != (hidden,) or prev.c.shape != (hidden,):
        raise ValueError("state shape does not match cell size")
    i, g, f, o = gate_activations(x, prev, p)
    c = f * prev.c + i * g
    h = np.tanh(c) * o
    return LstmState(h, c)


def _run_direction(
    embedding: np.ndarray,
    cell: LstmCellParams,
    ids: np.ndarray,
    true_lens: np.ndarray,
    keep_cache: bool,
) -> tuple[np.ndarray, list | None]:
    """Batched recurrence over the unpadded prefixes; returns last hidden."""
    batch, _ = ids.shape
    hidden = cell.b_i.shape[0]
    dtype = embedding.dtype
    h = np.zeros((batch, hidden), dtype=dtype)
    c = np.zeros((batch, hidden), dtype=dtype)
    t_eff = int(true_lens.max()) if batch else 0
    cache = [] if keep_cache else None
    for t in range(t_eff):
        tok = ids[:, t]
        x = embedding[tok]
        a_i = x @ cell.W_xi.T + h @ cell.U_hi.T + cell.b_i
        a_g = x @ cell.W_xg.T + h @ cell.U_hg.T + cell.b_g
        a_f = x @ cell.W_xf.T + h @ cell.U_hf.T + cell.b_f
        a_o = x @ cell.W_xo.T + h @ cell.U_ho.T + cell.b_o
        i = sigmoid(a_i)
        g = np.tanh(a_g)
        f = sigmoid(a_f)
        o = sigmoid(a_o)
        c_cand = f * c + i * g
        tanh_c = np.tanh(c_cand)
        h_cand = tanh_c * o
        mask = (t < true_lens).astype(dtype)[:, None]
        if keep_cache:
            cache.append(
                {"tok": tok, "x": x, "h_prev": h, "c_prev": c, "i": i, "g": g,
                 "f": f, "o": o, "tanh_c": tanh_c, "mask": mask}
            )
        h = mask * h_cand + (1.0 - mask) * h
        c = mask * c_cand + (1.0 - mask) * c
    return h, cache


def _reverse_prefixes(ids: np.ndarray, true_lens: np.ndarray) -> np.ndarray:
    """Reverse each row's unpadded prefix, keeping the padding at the end."""
    rev = ids.copy()
    for b in range(ids.shape[0]):
        n = int(true_lens[b])
        rev[b, :n] = ids[b, :n][::-1]
    return rev


def _dropout_mask(rng: np.random.Generator | None, shape, rate: float, dtype) -> np.ndarray:
    if rate <= 0.0:
        return np.ones(shape, dtype=dtype)
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    keep = (rng.random(shape) >= rate).astype(dtype)
    return keep / np.asarray(1.0 - rate, dtype=dtype)


def forward_batch(
    params: ModelParams,
    ids: np.ndarray,
    true_lens: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
    keep_cache: bool = False,
):
    """Probabilities for a batch; with ``keep_cache`` also the intermediates.

    ``ids`` is (batch, max_len) int32, ``true_lens`` (batch,) pre-padding
    lengths.  Returns ``(probs, logits, cache)``; cache is None unless
    requested.
    """
    config = params.config
    if ids.ndim != 2:
        raise ValueError("ids must be (batch, max_len)")
    if ids.min(initial=0) < 0 or ids.max(initial=0) >= config.embedding_rows:
        raise ValueError("token id out of embedding range")
    dtype = params.embedding.dtype

    h_fwd, cache_fwd = _run_direction(params.embedding, params.fwd, ids, true_lens, keep_cache)
    if config.bidirectional:
        rev_ids = _reverse_prefixes(ids, true_lens)
        h_bwd, cache_bwd = _run_direction(params.embedding, params.bwd, rev_ids, true_lens, keep_cache)
        h_last = np.concatenate([h_fwd, h_bwd], axis=1)
    else:
        rev_ids = None
        h_bwd, cache_bwd = None, None
        h_last = h_fwd

    rate = config.dropout_rate if training else 0.0
    drop1 = _dropout_mask(rng, h_last.shape, rate, dtype)
    h_drop = h_last * drop1
    a1 = h_drop @ params.dense_w.T + params.dense_b
    r1 = np.maximum(a1, 0.0)
    drop2 = _dropout_mask(rng, r1.shape, rate, dtype)
    r2 = r1 * drop2
    logits = r2 @ params.out_w + params.out_b
    probs = sigmoid(logits)

    cache = None
    if keep_cache:
        cache = {
            "ids": ids, "rev_ids": rev_ids, "true_lens": true_lens,
            "fwd": cache_fwd, "bwd": cache_bwd,
            "h_last": h_last, "drop1": drop1, "h_drop": h_drop,
            "a1": a1, "r1": r1, "drop2": drop2, "r2": r2,
            "logits": logits, "probs": probs,
        }
    return probs, logits, cache


def _as_batch(seq) -> tuple[np.ndarray, np.ndarray]:
    ids = np.asarray(seq.ids, dtype=np.int32)[None, :]
    lens = np.asarray([seq.true_len], dtype=np.int32)
    return ids, lens


def forward(
    params: ModelParams,
    seq,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> float:
    """Malicious-probability for one encoded sequence."""
    ids, lens = _as_batch(seq)
    probs, _, _ = forward_batch(params, ids, lens, training=training, rng=rng)
    return float(probs[0])


def bilstm_forward(
    params: ModelParams,
    seq,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> float:
    """Bidirectional variant of :func:`forward` (requires a bidirectional model)."""
    if not params.config.bidirectional:
        raise ValueError("model is not bidirectional")
    return forward(params, seq, training=training, rng=rng)


def last_hidden(params: ModelParams, seq) -> np.ndarray:
    """The pre-head hidden vector (concatenated for bidirectional models)."""
    ids, lens = _as_batch(seq)
    h_fwd, _ = _run_direction(params.embedding, params.fwd, ids, lens, keep_cache=False)
    if not params.config.bidirectional:
        return h_fwd[0]
    rev_ids = _reverse_prefixes(ids, lens)
    h_bwd, _ = _run_direction(params.embedding, params.bwd, rev_ids, lens, keep_cache=False)
    return np.concatenate([h_fwd[0], h_bwd[0]])
