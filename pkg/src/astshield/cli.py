"""Command-line entry point tying the whole workflow together.

Subcommands: ``gen`` (synthetic corpus), ``pipeline`` (scripts to JSONL),
``vocab``, ``stats``, ``train``, ``eval``, ``crossval``, ``report``.
Every subcommand writes its artifacts plus a machine-readable
``*_summary.json`` under the chosen output location; given identical
inputs and seed the outputs are byte-identical.  Defaults can come from
a JSON config file (``--config``); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import metrics as ev
from . import nn, report, stats, synth, vocab as vb
from .corpus import ingest_corpus, read_manifest
from .parser import parse_text
from .pipeline import linearize, read_jsonl, write_jsonl

log = logging.getLogger("astshield")

# flag defaults, overridable by --config, overridden by explicit flags
DEFAULTS = {
    "obfuscation": 0.5,
    "cap": vb.DEFAULT_CAP,
    "max_len": vb.DEFAULT_MAX_LEN,
    "embed_dim": 128,
    "hidden_dim": 64,
    "dense_dim": 64,
    "dropout": 0.5,
    "epochs": 200,
    "patience": 5,
    "batch_size": 8,
    "learning_rate": 1e-3,
    "k": 5,
    "threshold": 0.5,
    "stoplist": "default",
    "mode": "ast",
    "balance": True,
}


class CliError(Exception):
    """Fatal data/usage problem; message goes to stderr, exit status 1."""


def _setup_logging() -> None:
    level = os.environ.get("ASTSHIELD_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from None
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    return raw


def _resolve(args: argparse.Namespace, key: str):
    """Explicit flag > config file > built-in default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in args._config:
        return args._config[key]
    return DEFAULTS[key]


def _write_summary(out_dir: Path, command: str, payload: dict) -> Path:
    path = out_dir / f"{command}_summary.json"
    payload = {"command": command, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _stoplist_from(arg: str) -> frozenset[str]:
    if arg == "default":
        return vb.default_stoplist()
    if arg == "none":
        return frozenset()
    return vb.load_stoplist(arg)


# ---------------------------------------------------------------------------
# dataset loading shared by vocab/train/eval/crossval
# ---------------------------------------------------------------------------

def _require(condition: bool, message: str) -> None:
    if not condition:
        raise CliError(message)


def _load_records(data_path: str):
    result = read_jsonl(data_path)
    for err in result.errors:
        log.warning("%s line %d: %s", data_path, err.line, err.message)
    _require(bool(result.records), f"no usable records in {data_path}")
    if result.errors:
        print(f"warning: skipped {len(result.errors)} malformed line(s) in {data_path}", file=sys.stderr)
    return result.records


def _load_scripts(manifest_path: str):
    manifest = read_manifest(manifest_path)
    scripts, errors = ingest_corpus(manifest)
    for err in errors:
        log.warning("%s: %s", err.path, err.message)
    _require(bool(scripts), f"no readable scripts behind {manifest_path}")
    if errors:
        print(f"warning: {len(errors)} unreadable manifest entr(ies) skipped", file=sys.stderr)
    return scripts


def _build_dataset(args: argparse.Namespace, vocabulary: vb.Vocabulary | None = None):
    """Returns (dataset triples, vocabulary, labeled id pairs)."""
    mode = _resolve(args, "mode")
    cap = _resolve(args, "cap")
    max_len = _resolve(args, "max_len")
    stoplist = _stoplist_from(_resolve(args, "stoplist"))
    if mode == "ast":
        _require(args.data is not None, "--data (JSONL) is required in ast mode")
        records = _load_records(args.data)
        if vocabulary is None:
            vocabulary = vb.vocab_from_records(records, cap, stoplist)
        dataset = [
            (r.script_id, vb.encode(r, vocabulary, max_len), r.label) for r in records
        ]
    elif mode == "raw":
        _require(args.manifest is not None, "--manifest is required in raw mode")
        scripts = _load_scripts(args.manifest)
        if vocabulary is None:
            vocabulary = vb.vocab_from_scripts(scripts, cap, stoplist)
        dataset = [
            (s.id, vb.encode_raw(s, vocabulary, max_len), s.label) for s in scripts
        ]
    else:
        raise CliError(f"unknown tokenization mode {mode!r}")
    labeled = [(sid, label) for sid, _, label in dataset]
    return dataset, vocabulary, labeled


def _model_config(args: argparse.Namespace) -> nn.ModelConfig:
    return nn.ModelConfig(
        vocab_size=_resolve(args, "cap"),
        embed_dim=_resolve(args, "embed_dim"),
        hidden_dim=_resolve(args, "hidden_dim"),
        dense_dim=_resolve(args, "dense_dim"),
        dropout_rate=_resolve(args, "dropout"),
        bidirectional=args.model == "bilstm",
        max_len=_resolve(args, "max_len"),
    )


def _train_config(args: argparse.Namespace) -> nn.TrainConfig:
    return nn.TrainConfig(
        max_epochs=_resolve(args, "epochs"),
        patience=_resolve(args, "patience"),
        batch_size=_resolve(args, "batch_size"),
        learning_rate=_resolve(args, "learning_rate"),
        seed=args.seed,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    spec = synth.GeneratorSpec(
        seed=args.seed,
        n_benign=args.benign,
        n_malicious=args.malicious,
        obfuscation=_resolve(args, "obfuscation"),
    )
    manifest, scripts = synth.write_corpus(spec, out_dir)
    _write_summary(out_dir, "gen", {
        "benign": spec.n_benign,
        "malicious": spec.n_malicious,
        "obfuscation": spec.obfuscation,
        "seed": spec.seed,
        "manifest": "manifest.csv",
        "scripts": len(scripts),
    })
    print(f"wrote {len(scripts)} scripts + manifest to {out_dir}")
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    scripts = _load_scripts(args.manifest)
    records = []
    error_nodes = 0
    for script in scripts:
        tree = parse_text(script.text)
        error_nodes += sum(1 for n in tree.walk() if n.kind.value == "ErrorAst")
        records.append(linearize(tree, script.id, script.label))
    out_path = Path(args.out)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    count = write_jsonl(records, out_path)
    _write_summary(out_path.parent, "pipeline", {
        "manifest": args.manifest,
        "records": count,
        "output": out_path.name,
        "unparseable_regions": error_nodes,
    })
    print(f"wrote {count} records to {out_path}")
    return 0


def cmd_vocab(args: argparse.Namespace) -> int:
    _, vocabulary, _ = _build_dataset(args)
    out_path = Path(args.out)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    vb.save_vocabulary(vocabulary, out_path)
    _write_summary(out_path.parent, "vocab", {
        "size": len(vocabulary),
        "cap": vocabulary.cap,
        "mode": _resolve(args, "mode"),
        "output": out_path.name,
    })
    print(f"vocabulary of {len(vocabulary)} tokens (cap {vocabulary.cap}) -> {out_path}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    scripts = _load_scripts(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_report = stats.corpus_report(scripts)
    stats.write_stats_csv(scripts, out_dir / "script_stats.csv")
    stats.write_report_csv(corpus_report, out_dir / "stats_summary.csv", out_dir / "line_histogram.csv")
    block = stats.format_report(corpus_report)
    (out_dir / "stats_report.txt").write_text(block + "\n", encoding="utf-8")
    _write_summary(out_dir, "stats", {
        "manifest": args.manifest,
        "total": corpus_report.total,
        "per_label": {
            str(s.label): {"count": s.count, "entropy_mean": round(s.entropy_mean, 6)}
            for s in corpus_report.per_label
        },
        "outputs": ["script_stats.csv", "stats_summary.csv", "line_histogram.csv", "stats_report.txt"],
    })
    print(block)
    return 0


def _batched_probs(params: nn.ModelParams, dataset, batch_size: int = 64) -> list[float]:
    probs: list[float] = []
    for start in range(0, len(dataset), batch_size):
        chunk = dataset[start: start + batch_size]
        ids = np.asarray([s[1].ids for s in chunk], dtype=np.int32)
        lens = np.asarray([s[1].true_len for s in chunk], dtype=np.int32)
        p, _, _ = nn.forward_batch(params, ids, lens, training=False)
        probs.extend(float(x) for x in p)
    return probs


def _write_predictions(dataset, probs, threshold: float, path: Path) -> None:
    import csv

    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["script_id", "probability", "predicted", "label"])
        for (sid, _, label), prob in zip(dataset, probs):
            writer.writerow([sid, f"{prob:.6f}", int(prob >= threshold), label])


def cmd_train(args: argparse.Namespace) -> int:
    dataset, vocabulary, labeled = _build_dataset(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    splits = nn.split_traditional(labeled, seed=args.seed, balance=_resolve(args, "balance"))
    model_cfg = _model_config(args)
    train_cfg = _train_config(args)
    log.info("training %s on %d/%d/%d samples", args.model, len(splits.train), len(splits.validation), len(splits.test))
    params, history = nn.train(model_cfg, dataset, splits, train_cfg)

    vb.save_vocabulary(vocabulary, out_dir / "vocab.txt")
    nn.save_checkpoint(params, out_dir / "checkpoint.bin")
    nn.write_history_csv(history, out_dir / "history.csv")

    by_id = {s[0]: s for s in dataset}
    threshold = _resolve(args, "threshold")
    name = f"{args.model}-{_resolve(args, 'mode')}"
    test_set = [by_id[i] for i in splits.test]
    summary: dict = {
        "model": name,
        "seed": args.seed,
        "epochs_run": history.stopped_epoch,
        "best_epoch": history.best_epoch,
        "stop_reason": history.stop_reason,
        "best_val_loss": round(history.best_val_loss, 6),
        "outputs": ["checkpoint.bin", "history.csv", "vocab.txt"],
    }
    if test_set:
        probs = _batched_probs(params, test_set)
        cm = ev.confusion(probs, [s[2] for s in test_set], threshold)
        m = ev.metrics(cm)
        ev.write_comparison_csv([(name, m)], out_dir / "metrics.csv")
        _write_predictions(test_set, probs, threshold, out_dir / "predictions.csv")
        summary["test"] = dict(zip(("accuracy", "precision", "recall", "f1"), m.as_row()))
        summary["outputs"] += ["metrics.csv", "predictions.csv"]
    _write_summary(out_dir, "train", summary)
    print(
        f"{name}: stopped at epoch {history.stopped_epoch} (best {history.best_epoch}); artifacts in {out_dir}"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    params = nn.load_checkpoint(args.checkpoint)
    vocabulary = vb.load_vocabulary(args.vocab)
    # encode with the *loaded* vocabulary so ids line up with the embedding
    args_max_len = params.config.max_len
    setattr(args, "max_len", args_max_len)
    dataset, _, _ = _build_dataset(args, vocabulary=vocabulary)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    threshold = _resolve(args, "threshold")
    probs = _batched_probs(params, dataset)
    cm = ev.confusion(probs, [s[2] for s in dataset], threshold)
    m = ev.metrics(cm)
    name = args.name or f"{'bilstm' if params.config.bidirectional else 'lstm'}-{_resolve(args, 'mode')}"
    ev.write_comparison_csv([(name, m)], out_dir / "metrics.csv")
    _write_predictions(dataset, probs, threshold, out_dir / "predictions.csv")
    _write_summary(out_dir, "eval", {
        "model": name,
        "checkpoint": str(args.checkpoint),
        "samples": len(dataset),
        "confusion": {"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn},
        "metrics": dict(zip(("accuracy", "precision", "recall", "f1"), m.as_row())),
        "outputs": ["metrics.csv", "predictions.csv"],
    })
    print(f"{name}: acc={m.as_row()[0]} precision={m.as_row()[1]} recall={m.as_row()[2]} f1={m.as_row()[3]}")
    return 0


def cmd_crossval(args: argparse.Namespace) -> int:
    dataset, vocabulary, labeled = _build_dataset(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_cfg = _model_config(args)
    train_cfg = _train_config(args)
    by_id = {s[0]: s for s in dataset}

    def trainer(train_ids, val_ids):
        splits = nn.Splits(tuple(train_ids), tuple(val_ids), ())
        params, _ = nn.train(model_cfg, dataset, splits, train_cfg)
        return _batched_probs(params, [by_id[i] for i in val_ids])

    k = _resolve(args, "k")
    result = ev.cross_validate(trainer, labeled, k=k, seed=args.seed, threshold=_resolve(args, "threshold"))
    name = f"{args.model}-{_resolve(args, 'mode')}"
    ev.write_fold_csv(result, out_dir / "folds.csv")
    ev.write_comparison_csv([(name, result.mean)], out_dir / "metrics.csv")
    vb.save_vocabulary(vocabulary, out_dir / "vocab.txt")
    _write_summary(out_dir, "crossval", {
        "model": name,
        "k": k,
        "seed": args.seed,
        "mean": dict(zip(("accuracy", "precision", "recall", "f1"), result.mean.as_row())),
        "std": dict(zip(("accuracy", "precision", "recall", "f1"), result.std.as_row())),
        "outputs": ["folds.csv", "metrics.csv", "vocab.txt"],
    })
    print(f"{name} {k}-fold mean: acc={result.mean.as_row()[0]} recall={result.mean.as_row()[2]}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: list[str] = []

    for history_csv in args.history or []:
        stem = Path(history_csv).stem
        png = report.plot_history(history_csv, out_dir / f"curves_{stem}.png", title=stem)
        artifacts.append(png.name)

    merged: list[tuple[str, ev.Metrics]] = []
    for comparison_csv in args.comparison or []:
        merged.extend(ev.read_comparison_csv(comparison_csv))
    if merged:
        ev.write_comparison_csv(merged, out_dir / "comparison.csv")
        png = report.plot_comparison(merged, out_dir / "comparison.png")
        artifacts += ["comparison.csv", png.name]

    if args.stats_csv:
        rows = report.read_script_stats_csv(args.stats_csv)
        artifacts.append(report.plot_entropy_hist(rows, out_dir / "entropy_hist.png").name)
        artifacts.append(report.plot_line_count_hist(rows, out_dir / "line_hist.png").name)

    _require(bool(artifacts), "nothing to report: pass --history/--comparison/--stats-csv")
    _write_summary(out_dir, "report", {"outputs": sorted(artifacts)})
    print(f"report artifacts in {out_dir}: {', '.join(sorted(artifacts))}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="astshield",
        description="PowerShell AST pipelines and from-scratch LSTM/BiLSTM script classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON file with default option values (flags win)")

    p = sub.add_parser("gen", help="generate a synthetic labeled corpus")
    add_common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--benign", type=int, required=True)
    p.add_argument("--malicious", type=int, required=True)
    p.add_argument("--obfuscation", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("pipeline", help="parse manifest scripts into a JSONL pair file")
    add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)

    def add_data_source(p: argparse.ArgumentParser) -> None:
        p.add_argument("--data", help="JSONL records (ast mode)")
        p.add_argument("--manifest", help="corpus manifest (raw mode)")
        p.add_argument("--mode", choices=("ast", "raw"), default=None)
        p.add_argument("--cap", type=int, default=None)
        p.add_argument("--max-len", dest="max_len", type=int, default=None)
        p.add_argument("--stoplist", default=None, help="path, 'default', or 'none'")

    p = sub.add_parser("vocab", help="build and save a vocabulary")
    add_common(p)
    add_data_source(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("stats", help="corpus statistics (entropy, sizes, line counts)")
    add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    def add_model_options(p: argparse.ArgumentParser) -> None:
        p.add_argument("--model", choices=("lstm", "bilstm"), required=True)
        p.add_argument("--embed-dim", dest="embed_dim", type=int, default=None)
        p.add_argument("--hidden-dim", dest="hidden_dim", type=int, default=None)
        p.add_argument("--dense-dim", dest="dense_dim", type=int, default=None)
        p.add_argument("--dropout", type=float, default=None)
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--patience", type=int, default=None)
        p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
        p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
        p.add_argument("--threshold", type=float, default=None)

    p = sub.add_parser("train", help="train a classifier with the traditional split")
    add_common(p)
    add_data_source(p)
    add_model_options(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--balance", dest="balance", action="store_true", default=None,
                   help="undersample the majority class to parity (default)")
    p.add_argument("--no-balance", dest="balance", action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved checkpoint")
    add_common(p)
    add_data_source(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--name", help="model name for the comparison row")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("crossval", help="stratified K-fold cross-validation")
    add_common(p)
    add_data_source(p)
    add_model_options(p)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("report", help="render figures for existing artifacts")
    add_common(p)
    p.add_argument("--history", action="append", help="history CSV (repeatable)")
    p.add_argument("--comparison", action="append", help="comparison CSV (repeatable)")
    p.add_argument("--stats-csv", dest="stats_csv", help="per-script stats CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args._config = _load_config(getattr(args, "config", None))
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, nn.TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
