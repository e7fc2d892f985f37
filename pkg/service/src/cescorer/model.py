"""Model loading and batch scoring."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from .inputs import MODES, SCORE_SEGMENTS, compose_pair


@dataclass
class ServiceConfig:
    model: str
    mode: str = "injected"       # plain | injected
    score_segment: str = "b"     # a | b
    max_length: int = 256        # hard truncation after tokenization
    device: str = "cpu"
    batch_size: int = 32

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.score_segment not in SCORE_SEGMENTS:
            raise ValueError(f"unknown score segment {self.score_segment!r}")
        if self.max_length < 8:
            raise ValueError("max_length too small")


class CrossEncoderScorer:
    """Scores (query, score_token, passage) triples with a classification head.

    The relevance score is the softmax probability of the positive class.
    Inference runs in eval mode with a fixed seed, so identical inputs give
    identical scores.
    """

    def __init__(self, config: ServiceConfig):
        self.config = config
        torch.manual_seed(0)
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        self.model = AutoModelForSequenceClassification.from_pretrained(config.model)
        self.model.to(config.device)
        self.model.eval()

    def compose(self, query: str, score_token: str | None, passage: str) -> tuple[str, str]:
        return compose_pair(query, score_token, passage, self.config.mode,
                            self.config.score_segment, self.tokenizer.sep_token)

    def encode(self, triples: Sequence[tuple[str, str | None, str]]):
        texts_a, texts_b = [], []
        for query, token, passage in triples:
            a, b = self.compose(query, token, passage)
            texts_a.append(a)
            texts_b.append(b)
        return self.tokenizer(
            texts_a, texts_b,
            padding=True, truncation=True, max_length=self.config.max_length,
            return_tensors="pt",
        ).to(self.config.device)

    def score_triples(self, triples: Sequence[tuple[str, str | None, str]]) -> list[float]:
        if not triples:
            return []
        scores: list[float] = []
        for lo in range(0, len(triples), self.config.batch_size):
            batch = triples[lo:lo + self.config.batch_size]
            encoded = self.encode(batch)
            with torch.no_grad():
                logits = self.model(**encoded).logits
            probs = torch.softmax(logits, dim=-1)[:, 1]
            scores.extend(float(p) for p in probs)
        return scores
