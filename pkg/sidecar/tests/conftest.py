import json
import os
import sys

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_sidecar") or sys.modules.get("tests.test_sidecar")
    lines = getattr(module, "RESULTS", []) if module else []
    if lines:
        terminalreporter.section("sidecar acceptance")
        for line in lines:
            terminalreporter.write_line(line)

WORDS = [
    "solar", "panel", "wind", "turbine", "grid", "water", "climate", "smart",
    "building", "consumption", "decision", "urban", "optimization", "design",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small randomly initialized transformer saved locally, so the contract
    tests run without model-hub access."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    d = tmp_path_factory.mktemp("tinybert")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + WORDS
    (d / "vocab.txt").write_text("\n".join(vocab) + "\n")
    try:  # transformers >= 5 takes a vocab dict; older versions take a path
        tokenizer = BertTokenizer(vocab={t: i for i, t in enumerate(vocab)})
    except TypeError:
        tokenizer = BertTokenizer(vocab_file=str(d / "vocab.txt"))
    tokenizer.save_pretrained(str(d))
    torch.manual_seed(1234)
    config = BertConfig(vocab_size=len(vocab), hidden_size=32, num_hidden_layers=2,
                        num_attention_heads=2, intermediate_size=64,
                        max_position_embeddings=48)
    BertModel(config).save_pretrained(str(d))
    return d


@pytest.fixture()
def ten_doc_corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    rng_words = WORDS
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(10):
            picks = [rng_words[(i + j) % len(rng_words)] for j in range(6)]
            fh.write(json.dumps({
                "id": f"doc{i:02d}",
                "title": f"title {i}",
                "abstract": " ".join(picks),
                "year": 2010 + i % 5,
            }) + "\n")
    return path
