import os
from pathlib import Path

import pytest

# the harness must never reach out to a model hub
os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

FIXTURES = Path(__file__).parent / "fixtures"
DATA_JSONL = FIXTURES / "data.jsonl"
MANIFEST = FIXTURES / "corpus" / "manifest.csv"

# the same frozen prediction/label fixture the upstream toolkit tests use
SHARED_METRICS_FIXTURE = Path(__file__).parents[2] / "tests" / "fixtures" / "metrics_fixture.json"


def build_tiny_checkpoint(out_dir: Path, texts: list[str]) -> Path:
    """A small random-weight RoBERTa-architecture checkpoint for smoke tests.

    Exercises the full fine-tuning machinery without the real pretrained
    base (which is not shipped with the repo).
    """
    import torch
    from tokenizers import ByteLevelBPETokenizer
    from tokenizers.processors import RobertaProcessing
    from transformers import PreTrainedTokenizerFast, RobertaConfig, RobertaForSequenceClassification

    torch.manual_seed(1234)
    bpe = ByteLevelBPETokenizer()
    bpe.train_from_iterator(
        texts, vocab_size=600, min_frequency=1,
        special_tokens=["<s>", "<pad>", "</s>", "<unk>", "<mask>"],
    )
    backend = getattr(bpe, "_tokenizer", bpe)
    backend.post_processor = RobertaProcessing(
        sep=("</s>", bpe.token_to_id("</s>")), cls=("<s>", bpe.token_to_id("<s>"))
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend,
        bos_token="<s>", eos_token="</s>", unk_token="<unk>",
        pad_token="<pad>", mask_token="<mask>", cls_token="<s>", sep_token="</s>",
    )
    config = RobertaConfig(
        vocab_size=tokenizer.vocab_size + 16,
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=128,
        max_position_embeddings=514,
        pad_token_id=tokenizer.pad_token_id,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.eos_token_id,
        num_labels=2,
    )
    model = RobertaForSequenceClassification(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return out_dir


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> Path:
    from codebert_harness.data import load_jsonl_samples

    texts = [s.text for s in load_jsonl_samples(DATA_JSONL)]
    return build_tiny_checkpoint(tmp_path_factory.mktemp("ckpt") / "tiny-roberta", texts)


@pytest.fixture(scope="session")
def jsonl_samples():
    from codebert_harness.data import load_jsonl_samples

    return load_jsonl_samples(DATA_JSONL)
