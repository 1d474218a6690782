"""Fine-tuning harness for a pretrained code transformer.

Consumes the AST pipeline's JSONL records (or raw scripts via a manifest)
through their file contracts only — this package is independent of the
toolkit that produces them.
"""

from .checkpoints import CheckpointNotFound, resolve_checkpoint
from .data import DataContractError, Sample, load_jsonl_samples, load_manifest_samples
from .evaluation import ConfusionCounts, Metrics, confusion, kfold_indices, metrics
from .finetune import FinetuneConfig, FinetuneResult, finetune, predict

__version__ = "0.1.0"

__all__ = [
    "CheckpointNotFound",
    "ConfusionCounts",
    "DataContractError",
    "FinetuneConfig",
    "FinetuneResult",
    "Metrics",
    "Sample",
    "confusion",
    "finetune",
    "kfold_indices",
    "load_jsonl_samples",
    "load_manifest_samples",
    "metrics",
    "predict",
    "resolve_checkpoint",
    "__version__",
]
