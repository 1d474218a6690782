"""Command line: ``finetune`` and ``predict``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checkpoints import CheckpointNotFound, checkpoint_architecture, resolve_checkpoint
from .data import DataContractError, load_jsonl_samples, load_manifest_samples
from .evaluation import write_comparison_csv, write_fold_csv
from .finetune import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_LENGTH,
    DEFAULT_WEIGHT_DECAY,
    FinetuneConfig,
    finetune,
    predict,
    write_predictions_csv,
)


def _load_samples(args: argparse.Namespace):
    if args.mode == "ast":
        if not args.data:
            raise SystemExit("error: --data (JSONL) is required in ast mode")
        return load_jsonl_samples(args.data)
    if not args.manifest:
        raise SystemExit("error: --manifest is required in raw mode")
    return load_manifest_samples(args.manifest)


def cmd_finetune(args: argparse.Namespace) -> int:
    checkpoint = resolve_checkpoint(args.checkpoint)
    samples = _load_samples(args)
    config = FinetuneConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        weight_decay=args.weight_decay,
        epochs=args.epochs,
        k=args.k,
        max_length=args.max_length,
        seed=args.seed,
        mode=args.mode,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = finetune(samples, config, checkpoint, out_dir=out_dir)

    name = f"codebert-{args.mode}"
    write_fold_csv(result.fold_metrics, result.mean, result.std, out_dir / "folds.csv")
    write_comparison_csv([(name, result.mean)], out_dir / "metrics.csv")
    layers, heads, hidden = checkpoint_architecture(checkpoint)
    summary = {
        "command": "finetune",
        "model": name,
        "base_checkpoint": str(checkpoint),
        "architecture": {"layers": layers, "heads": heads, "hidden": hidden},
        "k": config.k,
        "seed": config.seed,
        "samples": len(samples),
        "train_accuracy": round(result.train_accuracy, 6),
        "mean": dict(zip(("accuracy", "precision", "recall", "f1"), result.mean.as_row())),
        "outputs": ["folds.csv", "metrics.csv"] + [f"fold{i}/" for i in range(config.k)],
    }
    (out_dir / "finetune_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"{name}: {config.k}-fold mean recall {result.mean.as_row()[2]}, artifacts in {out_dir}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    samples = _load_samples(args)
    rows = predict(args.checkpoint, samples, max_length=args.max_length, batch_size=args.batch_size)
    out_path = Path(args.out)
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    write_predictions_csv(rows, out_path)
    print(f"wrote {len(rows)} predictions to {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codebert-harness",
        description="Fine-tune a pretrained code transformer on AST pipeline JSONL files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_options(p):
        p.add_argument("--data", help="pipeline JSONL (ast mode)")
        p.add_argument("--manifest", help="corpus manifest CSV (raw mode)")
        p.add_argument("--mode", choices=("ast", "raw"), default="ast")
        p.add_argument("--max-length", dest="max_length", type=int, default=DEFAULT_MAX_LENGTH)
        p.add_argument("--batch-size", dest="batch_size", type=int, default=DEFAULT_BATCH_SIZE)

    p = sub.add_parser("finetune", help="K-fold fine-tuning")
    add_data_options(p)
    p.add_argument("--checkpoint", help="pretrained base checkpoint directory")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=DEFAULT_LEARNING_RATE)
    p.add_argument("--weight-decay", dest="weight_decay", type=float, default=DEFAULT_WEIGHT_DECAY)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("predict", help="score samples with a fine-tuned checkpoint")
    add_data_options(p)
    p.add_argument("--checkpoint", required=True, help="fine-tuned checkpoint directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CheckpointNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataContractError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
