"""Shared fixture: a tiny BERT-style checkpoint built offline.

The vocabulary carries the special tokens, integers 0..299 as single
tokens (so injected score tokens stay whole), plus character-level
wordpieces covering arbitrary ASCII words. Weights are randomly
initialized from a fixed seed; small enough that CPU tests stay fast.
"""

import string

import pytest
import torch
from transformers import BertConfig, BertForSequenceClassification, BertTokenizer


def build_tiny_checkpoint(directory: str) -> str:
    specials = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    letters = list(string.ascii_lowercase)
    tokens = (
        specials
        + [str(i) for i in range(300)]
        + letters
        + ["##" + c for c in letters]
        + ["##" + str(d) for d in range(10)]
    )
    vocab = {t: i for i, t in enumerate(tokens)}
    tokenizer = BertTokenizer(vocab=vocab)

    torch.manual_seed(7)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=192,
        num_labels=2,
    )
    model = BertForSequenceClassification(config)
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    return build_tiny_checkpoint(str(tmp_path_factory.mktemp("tiny-model")))
