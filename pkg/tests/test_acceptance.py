"""Acceptance suite: one test per criterion, one PASS line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
Budgeted criteria assert their own wall-clock limits.
"""

import random
import time

import numpy as np
import pytest

from astshield import nn
from astshield.ast_nodes import AstKind
from astshield.corpus import decode_script_bytes
from astshield.metrics import ConfusionMatrix, confusion, cross_validate, kfold, metrics
from astshield.parser import parse_text
from astshield.pipeline import PipelinePair, PipelineRecord, linearize, read_jsonl, write_jsonl
from astshield.stats import corpus_report
from astshield.synth import GeneratorSpec, generate
from astshield.vocab import (
    OOV_ID,
    PAD_ID,
    build_vocab,
    default_stoplist,
    encode,
    encode_tokens,
    vocab_from_records,
)

from conftest import CRADLE_KINDS_DEPTHS, CRADLE_SRC, PING_COMMAND_KINDS, PING_SRC


def announce(name: str) -> None:
    print(f"\nACCEPTANCE PASS: {name}")


# ---------------------------------------------------------------------------
# 1. parser goldens + fuzz, under 30 s
# ---------------------------------------------------------------------------

def test_criterion_parser_goldens_and_fuzz():
    started = time.monotonic()

    tree = parse_text(PING_SRC)
    command = tree.children[0].children[0]
    assert [c.kind.value for c in command.children] == PING_COMMAND_KINDS

    flat = []

    def visit(node, depth):
        flat.append((node.kind.value, depth))
        for child in node.children:
            visit(child, depth + 1)

    for child in parse_text(CRADLE_SRC).children:
        visit(child, 0)
    assert flat == CRADLE_KINDS_DEPTHS

    rng = random.Random(987654321)
    for _ in range(10_000):
        raw = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 200)))
        text = decode_script_bytes(raw)
        root = parse_text(text)  # zero crashes
        for node in root.walk():  # zero span violations
            assert node.text == text[node.span[0]: node.span[1]]
            for child in node.children:
                assert node.span[0] <= child.span[0] <= child.span[1] <= node.span[1]

    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"parser criterion took {elapsed:.1f}s"
    announce(f"parser goldens + 10k-input fuzz ({elapsed:.1f}s < 30s)")


# ---------------------------------------------------------------------------
# 2. pipeline round-trip over 1k records + cradle linearization golden
# ---------------------------------------------------------------------------

def _random_records(rng: random.Random, count: int) -> list[PipelineRecord]:
    kinds = [k.value for k in AstKind]
    alphabet = "abcXYZ01 $;:'\"\\/-é中"
    records = []
    for i in range(count):
        pairs = []
        depth = 0
        for _ in range(rng.randrange(0, 10)):
            depth = rng.randrange(0, depth + 2)
            text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12)))
            pairs.append(PipelinePair(rng.choice(kinds), text, depth))
        records.append(PipelineRecord(f"r{i}", rng.randrange(2), tuple(pairs)))
    return records


def test_criterion_pipeline_roundtrip(tmp_path):
    records = _random_records(random.Random(24601), 1000)
    path = tmp_path / "roundtrip.jsonl"
    write_jsonl(records, path)
    result = read_jsonl(path)
    assert not result.errors
    assert result.records == records

    record = linearize(parse_text(CRADLE_SRC), "cradle", 1)
    assert [(p.ast_type, p.depth) for p in record.pairs] == CRADLE_KINDS_DEPTHS
    announce("pipeline round-trip identity (1k records) + cradle linearization golden")


# ---------------------------------------------------------------------------
# 3. tokenizer laws over randomized corpora
# ---------------------------------------------------------------------------

def test_criterion_tokenizer_laws():
    rng = random.Random(555)

    # cap enforcement at 6,000 on a corpus with more distinct tokens than that
    big_stream = [f"tok{i}" for i in range(8000) for _ in range(rng.randrange(1, 4))]
    rng.shuffle(big_stream)
    vocab = build_vocab([big_stream], cap=6000)
    assert len(vocab) == 6000
    ids = sorted(vocab.token_to_id.values())
    assert ids[0] == 2 and ids[-1] == 6001

    # OOV id 1, padding id 0, fixed length 400
    excluded = next(t for t in (f"tok{i}" for i in range(8000)) if t not in vocab.token_to_id)
    seq = encode_tokens([excluded, "tok0"], vocab, max_len=400)
    assert len(seq.ids) == 400
    assert seq.ids[0] == OOV_ID
    assert all(i == PAD_ID for i in seq.ids[seq.true_len:])

    for trial in range(30):
        streams = [
            [f"w{rng.randrange(40)}" for _ in range(rng.randrange(0, 30))]
            for _ in range(rng.randrange(1, 12))
        ]
        cap = rng.randrange(1, 45)
        v1 = build_vocab(streams, cap=cap)
        assert v1 == build_vocab(streams, cap=cap)                 # determinism
        v2 = build_vocab(streams, cap=cap + 1)
        assert v1.ranked_tokens() == v2.ranked_tokens()[: len(v1)]  # monotone cap
        assert len(v1) <= cap
        dense = sorted(v1.token_to_id.values())
        assert dense == list(range(2, 2 + len(dense)))
    announce("tokenizer laws: cap 6000, OOV=1, length 400, determinism, monotone cap")


# ---------------------------------------------------------------------------
# 4. LSTM math: hand-derived values + gradient checks, under 60 s
# ---------------------------------------------------------------------------

def test_criterion_lstm_math():
    from astshield.nn.model import LstmCellParams
    from astshield.nn.backprop import batch_loss, gradients

    started = time.monotonic()

    cfg1 = nn.ModelConfig(vocab_size=5, embed_dim=1, hidden_dim=1, dense_dim=1, dropout_rate=0.0)
    template = nn.init_params(cfg1, seed=0, dtype=np.float64).fwd
    ones = LstmCellParams(
        **{n: np.ones_like(getattr(template, n)) for n in LstmCellParams.FIELD_NAMES}
    )
    for name in ("b_i", "b_g", "b_f", "b_o"):
        getattr(ones, name)[:] = 0.0
    state = nn.lstm_step(np.zeros(1), nn.LstmState(np.zeros(1), np.ones(1)), ones)
    assert state.c[0] == pytest.approx(0.5, abs=1e-12)
    assert state.h[0] == pytest.approx(0.23106, abs=1e-5)

    zeros = LstmCellParams(
        **{n: np.zeros_like(getattr(template, n)) for n in LstmCellParams.FIELD_NAMES}
    )
    i, g, f, o = nn.gate_activations(np.zeros(1), nn.LstmState(np.zeros(1), np.zeros(1)), zeros)
    assert (i[0], f[0], o[0], g[0]) == (0.5, 0.5, 0.5, 0.0)

    worst_overall = 0.0
    checked = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        cfg = nn.ModelConfig(
            vocab_size=int(rng.integers(5, 12)),
            embed_dim=int(rng.integers(1, 4)),
            hidden_dim=int(rng.integers(1, 5)),
            dense_dim=int(rng.integers(1, 4)),
            dropout_rate=0.0,
            bidirectional=bool(seed % 2),
            max_len=6,
        )
        params = nn.init_params(cfg, seed=seed, dtype=np.float64)
        params.dense_b += rng.normal(scale=0.1, size=params.dense_b.shape)
        params.out_b += rng.normal(scale=0.1)
        batch = int(rng.integers(1, 4))
        lens = rng.integers(1, cfg.max_len + 1, size=batch).astype(np.int32)
        ids = np.zeros((batch, cfg.max_len), dtype=np.int32)
        for b in range(batch):
            ids[b, : lens[b]] = rng.integers(1, cfg.vocab_size + 2, size=lens[b])
        labels = rng.integers(0, 2, size=batch).astype(np.int8)

        _, grads = gradients(params, ids, lens, labels, training=False)
        eps = 1e-4
        for name, tensor in params.named_tensors():
            it = np.nditer(tensor, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                original = tensor[idx]
                tensor[idx] = original + eps
                up = batch_loss(params, ids, lens, labels)
                tensor[idx] = original - eps
                down = batch_loss(params, ids, lens, labels)
                tensor[idx] = original
                fd = (up - down) / (2 * eps)
                analytic = grads[name][idx]
                rel = abs(fd - analytic) / max(abs(fd), abs(analytic), 1e-8)
                worst_overall = max(worst_overall, rel)
                checked += 1
    assert worst_overall < 1e-4, f"max relative error {worst_overall:.2e}"

    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"LSTM math criterion took {elapsed:.1f}s"
    announce(
        f"LSTM math: hand cases + gradient check over 20 configs "
        f"({checked} partials, max rel err {worst_overall:.1e}, {elapsed:.1f}s < 60s)"
    )


# ---------------------------------------------------------------------------
# 5. BiLSTM decomposition, exact
# ---------------------------------------------------------------------------

def test_criterion_bilstm_decomposition():
    from astshield.nn.model import last_hidden
    from astshield.vocab import TokenSequence

    cfg_bi = nn.ModelConfig(vocab_size=20, embed_dim=4, hidden_dim=3, dense_dim=3,
                            dropout_rate=0.0, max_len=12, bidirectional=True)
    cfg_uni = nn.ModelConfig(vocab_size=20, embed_dim=4, hidden_dim=3, dense_dim=3,
                             dropout_rate=0.0, max_len=12, bidirectional=False)
    rng = np.random.default_rng(2024)
    for trial in range(10):
        params = nn.init_params(cfg_bi, seed=trial)
        fwd_only = nn.init_params(cfg_uni, seed=0)
        fwd_only.embedding, fwd_only.fwd = params.embedding, params.fwd
        bwd_only = nn.init_params(cfg_uni, seed=0)
        bwd_only.embedding, bwd_only.fwd = params.embedding, params.bwd

        n = int(rng.integers(1, 12))
        tokens = [int(t) for t in rng.integers(1, 22, size=n)]
        seq = TokenSequence(tuple(tokens + [0] * (12 - n)), n)
        rev = TokenSequence(tuple(tokens[::-1] + [0] * (12 - n)), n)
        combined = last_hidden(params, seq)
        expected = np.concatenate([last_hidden(fwd_only, seq), last_hidden(bwd_only, rev)])
        assert np.array_equal(combined, expected)
    announce("BiLSTM last hidden == concat(forward pass, reversed pass), exactly")


# ---------------------------------------------------------------------------
# 6. overfit sanity + 5-fold recall + early-stopping behaviour, under 5 min
# ---------------------------------------------------------------------------

def _encoded_corpus():
    scripts = generate(GeneratorSpec(seed=7, n_benign=20, n_malicious=20, obfuscation=0.5))
    records = [linearize(parse_text(s.text), s.id, s.label) for s in scripts]
    vocab = vocab_from_records(records, cap=6000, stoplist=default_stoplist())
    dataset = [(r.script_id, encode(r, vocab, 400), r.label) for r in records]
    return dataset


def test_criterion_overfit_sanity():
    started = time.monotonic()
    dataset = _encoded_corpus()
    all_ids = tuple(s[0] for s in dataset)
    label_of = {s[0]: s[2] for s in dataset}
    by_id = {s[0]: s for s in dataset}

    overfit_splits = nn.Splits(train=all_ids, validation=all_ids, test=())
    fold_recalls = {}
    for model_name, bidirectional in (("lstm", False), ("bilstm", True)):
        cfg = nn.ModelConfig(vocab_size=6000, bidirectional=bidirectional)
        tc = nn.TrainConfig(max_epochs=200, patience=200, batch_size=8,
                            learning_rate=1e-3, seed=1, target_train_acc=0.95)
        _, history = nn.train(cfg, dataset, overfit_splits, tc)
        best_acc = max(e.train_acc for e in history.epochs)
        assert best_acc >= 0.95, f"{model_name} reached only {best_acc:.2f}"
        assert history.stopped_epoch <= 200

        def trainer(train_ids, val_ids, _cfg=cfg):
            splits = nn.Splits(tuple(train_ids), tuple(val_ids), ())
            fold_tc = nn.TrainConfig(max_epochs=60, patience=5, batch_size=8,
                                     learning_rate=1e-3, seed=1)
            params, _ = nn.train(_cfg, dataset, splits, fold_tc)
            ids = np.asarray([by_id[i][1].ids for i in val_ids], dtype=np.int32)
            lens = np.asarray([by_id[i][1].true_len for i in val_ids], dtype=np.int32)
            probs, _, _ = nn.forward_batch(params, ids, lens, training=False)
            return [float(p) for p in probs]

        result = cross_validate(trainer, [(i, label_of[i]) for i in all_ids], k=5, seed=1)
        assert result.mean.recall is not None and result.mean.recall >= 0.9, (
            f"{model_name} 5-fold mean recall {result.mean.recall}"
        )
        fold_recalls[model_name] = result.mean.recall

    # early stopping returns the best epoch on a contrived worsening schedule
    from astshield.vocab import TokenSequence

    def mk(ids):
        return TokenSequence(tuple(ids) + (0,) * (8 - len(ids)), len(ids))

    contrived = []
    for i in range(8):
        label = i % 2
        contrived.append((f"t{i}", mk([1 if label else 2] * 4), label))
    for i in range(4):
        label = i % 2
        contrived.append((f"v{i}", mk([1 if label else 2] * 4), 1 - label))
    splits = nn.Splits(tuple(f"t{i}" for i in range(8)), tuple(f"v{i}" for i in range(4)), ())
    cfg = nn.ModelConfig(vocab_size=10, embed_dim=4, hidden_dim=3, dense_dim=3,
                         dropout_rate=0.0, max_len=8)
    params, history = nn.train(
        cfg, contrived, splits,
        nn.TrainConfig(max_epochs=50, patience=1, batch_size=8, learning_rate=0.5, seed=3),
    )
    losses = [e.val_loss for e in history.epochs]
    assert all(losses[i] > losses[0] for i in range(1, len(losses)))
    assert history.best_epoch == 1 and history.stopped_epoch == 3
    assert history.best_val_loss == min(losses)

    elapsed = time.monotonic() - started
    assert elapsed < 300.0, f"overfit criterion took {elapsed:.1f}s"
    announce(
        "overfit sanity: train acc >= 0.95 within 200 epochs (LSTM+BiLSTM); "
        f"5-fold mean recall lstm={fold_recalls['lstm']:.2f}, bilstm={fold_recalls['bilstm']:.2f} "
        f">= 0.9; early stopping returns best epoch ({elapsed:.1f}s < 300s)"
    )


# ---------------------------------------------------------------------------
# 7. entropy trend
# ---------------------------------------------------------------------------

def test_criterion_entropy_trend():
    scripts = generate(GeneratorSpec(seed=7, n_benign=20, n_malicious=20, obfuscation=1.0))
    report = corpus_report(scripts)
    by_label = {s.label: s for s in report.per_label}
    assert by_label[1].entropy_mean > by_label[0].entropy_mean
    announce(
        f"entropy trend: malicious {by_label[1].entropy_mean:.3f} > benign {by_label[0].entropy_mean:.3f} bits/byte"
    )


# ---------------------------------------------------------------------------
# 8. metrics oracle
# ---------------------------------------------------------------------------

def test_criterion_metrics_oracle():
    fixture = metrics(ConfusionMatrix(tp=3, fp=1, fn=0, tn=6))
    assert fixture.recall == pytest.approx(1.0)
    assert fixture.precision == pytest.approx(0.75)
    assert fixture.accuracy == pytest.approx(0.9)

    rng = random.Random(31337)
    for _ in range(1000):
        n = rng.randrange(1, 40)
        preds = [rng.random() for _ in range(n)]
        labels = [rng.randrange(2) for _ in range(n)]
        threshold = rng.random()
        cm = confusion(preds, labels, threshold)
        tp = sum(1 for p, l in zip(preds, labels) if p >= threshold and l == 1)
        fp = sum(1 for p, l in zip(preds, labels) if p >= threshold and l == 0)
        fn = sum(1 for p, l in zip(preds, labels) if p < threshold and l == 1)
        tn = n - tp - fp - fn
        assert (cm.tp, cm.fp, cm.fn, cm.tn) == (tp, fp, fn, tn)
        m = metrics(cm)
        assert m.accuracy == pytest.approx((tp + tn) / n)
        assert m.precision == (pytest.approx(tp / (tp + fp)) if tp + fp else None)
        assert m.recall == (pytest.approx(tp / (tp + fn)) if tp + fn else None)
        if m.precision is not None and m.recall is not None and (m.precision + m.recall) > 0:
            assert m.f1 == pytest.approx(
                2 * m.precision * m.recall / (m.precision + m.recall)
            )
        else:
            assert m.f1 is None
    announce("metrics oracle: brute-force agreement on 1k random vectors + reference fixture")


# ---------------------------------------------------------------------------
# 9. K-fold laws
# ---------------------------------------------------------------------------

def test_criterion_kfold_laws():
    rng = random.Random(808)
    for _ in range(50):
        n0 = rng.randrange(5, 60)
        n1 = rng.randrange(5, 60)
        pairs = [(f"b{i}", 0) for i in range(n0)] + [(f"m{i}", 1) for i in range(n1)]
        plan = kfold(pairs, k=5, seed=rng.randrange(10_000))
        label_of = dict(pairs)
        seen = [i for fold in plan.folds for i in fold]
        assert len(seen) == len(set(seen)) == len(pairs)        # disjoint + covering
        for label in (0, 1):
            counts = [sum(1 for i in fold if label_of[i] == label) for fold in plan.folds]
            assert max(counts) - min(counts) <= 1               # per-label balance
    announce("K-fold laws: K=5 stratified partition over 50 randomized inputs")
