"""Backpropagation through time for the classifier.

Gradients are taken of the mean binary cross-entropy over the batch,
w.r.t. every learnable tensor including the embedding rows.  The
recurrence only ran over each sample's unpadded prefix, so masked steps
pass gradient straight through to the previous state.
"""

from __future__ import annotations

import numpy as np

from .model import LstmCellParams, ModelParams, forward_batch


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the offending sample id if known."""

    def __init__(self, message: str, sample_id: str | None = None, epoch: int | None = None):
        super().__init__(message)
        self.sample_id = sample_id
        self.epoch = epoch


def bce_from_logits(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-sample binary cross-entropy, computed stably from logits."""
    # non-finite logits produce NaN here and are reported by the caller
    with np.errstate(invalid="ignore", over="ignore"):
        return np.maximum(logits, 0.0) - logits * labels + np.log1p(np.exp(-np.abs(logits)))


def batch_loss(params: ModelParams, ids: np.ndarray, true_lens: np.ndarray, labels: np.ndarray,
               training: bool = False, rng=None) -> float:
    probs, logits, _ = forward_batch(params, ids, true_lens, training=training, rng=rng)
    return float(np.mean(bce_from_logits(logits, labels.astype(logits.dtype))))


def _zero_grads(params: ModelParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(tensor) for name, tensor in params.named_tensors()}


def _bptt_direction(
    cell: LstmCellParams,
    cache_steps: list,
    dh_last: np.ndarray,
    grads: dict[str, np.ndarray],
    prefix: str,
    d_embedding: np.ndarray,
) -> None:
    dh = dh_last
    dc = np.zeros_like(dh_last)
    for step in reversed(cache_steps):
        mask = step["mask"]
        i, g, f, o = step["i"], step["g"], step["f"], step["o"]
        tanh_c = step["tanh_c"]
        h_prev, c_prev, x = step["h_prev"], step["c_prev"], step["x"]

        dh_cand = dh * mask
        dh_pass = dh * (1.0 - mask)
        dc_cand = dc * mask + dh_cand * o * (1.0 - tanh_c * tanh_c)
        dc_pass = dc * (1.0 - mask)

        do = dh_cand * tanh_c
        di = dc_cand * g
        dg = dc_cand * i
        df = dc_cand * c_prev

        da_i = di * i * (1.0 - i)
        da_g = dg * (1.0 - g * g)
        da_f = df * f * (1.0 - f)
        da_o = do * o * (1.0 - o)

        grads[f"{prefix}.W_xi"] += da_i.T @ x
        grads[f"{prefix}.W_xg"] += da_g.T @ x
        grads[f"{prefix}.W_xf"] += da_f.T @ x
        grads[f"{prefix}.W_xo"] += da_o.T @ x
        grads[f"{prefix}.U_hi"] += da_i.T @ h_prev
        grads[f"{prefix}.U_hg"] += da_g.T @ h_prev
        grads[f"{prefix}.U_hf"] += da_f.T @ h_prev
        grads[f"{prefix}.U_ho"] += da_o.T @ h_prev
        grads[f"{prefix}.b_i"] += da_i.sum(axis=0)
        grads[f"{prefix}.b_g"] += da_g.sum(axis=0)
        grads[f"{prefix}.b_f"] += da_f.sum(axis=0)
        grads[f"{prefix}.b_o"] += da_o.sum(axis=0)

        dx = da_i @ cell.W_xi + da_g @ cell.W_xg + da_f @ cell.W_xf + da_o @ cell.W_xo
        np.add.at(d_embedding, step["tok"], dx)

        dh = dh_pass + (
            da_i @ cell.U_hi + da_g @ cell.U_hg + da_f @ cell.U_hf + da_o @ cell.U_ho
        )
        dc = dc_cand * f + dc_pass


def gradients(
    params: ModelParams,
    ids: np.ndarray,
    true_lens: np.ndarray,
    labels: np.ndarray,
    training: bool = True,
    rng: np.random.Generator | None = None,
    sample_ids: list[str] | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean-BCE loss and gradients for one batch.

    Raises :class:`TrainingDiverged` if any sample's loss is non-finite.
    """
    if ids.shape[0] == 0:
        raise ValueError("empty batch")
    probs, logits, cache = forward_batch(
        params, ids, true_lens, training=training, rng=rng, keep_cache=True
    )
    dtype = logits.dtype
    labels_f = labels.astype(dtype)
    per_sample = bce_from_logits(logits, labels_f)
    if not np.all(np.isfinite(per_sample)):
        bad = int(np.argmax(~np.isfinite(per_sample)))
        which = sample_ids[bad] if sample_ids else f"batch index {bad}"
        raise TrainingDiverged(f"non-finite loss for sample {which}", sample_id=str(which))
    loss = float(per_sample.mean())

    batch = ids.shape[0]
    grads = _zero_grads(params)

    # head: d(mean BCE)/d(logit) = (p - y) / batch
    dz = (probs - labels_f) / np.asarray(batch, dtype=dtype)
    grads["out.w"] += cache["r2"].T @ dz
    grads["out.b"] += dz.sum()
    dr2 = dz[:, None] * params.out_w[None, :]
    dr1 = dr2 * cache["drop2"]
    da1 = dr1 * (cache["a1"] > 0)
    grads["dense.w"] += da1.T @ cache["h_drop"]
    grads["dense.b"] += da1.sum(axis=0)
    dh_drop = da1 @ params.dense_w
    dh_last = dh_drop * cache["drop1"]

    hidden = params.config.hidden_dim
    if params.config.bidirectional:
        _bptt_direction(params.fwd, cache["fwd"], dh_last[:, :hidden], grads, "fwd", grads["embedding"])
        _bptt_direction(params.bwd, cache["bwd"], dh_last[:, hidden:], grads, "bwd", grads["embedding"])
    else:
        _bptt_direction(params.fwd, cache["fwd"], dh_last, grads, "fwd", grads["embedding"])
    return loss, grads
