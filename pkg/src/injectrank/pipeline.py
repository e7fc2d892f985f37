"""Re-ranker input construction and orchestration.

Builds the scorer inputs (query, optional injected score token, passage),
applies the word-level truncation caps, optionally masks passage words that
do not occur in the query, and drives batched scoring through a gateway.
The score token travels as its own field; composing special-token sequences
is the scorer's job because separator literals are tokenizer-specific.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .errors import DataFormatError, TransportError
from .lexical import RankedList, sort_entries
from .normalize import NormalizationConfig, tokens_for_scores

MASK_LITERAL = "[MASK]"


@dataclass(frozen=True)
class ScorerInput:
    """One (query, passage) pair as handed to a scorer; texts are post-truncation."""

    pair_id: str
    query_text: str
    passage_text: str
    score_token: str | None = None


@dataclass(frozen=True)
class RerankConfig:
    depth: int = 1000
    query_token_cap: int = 30
    passage_token_cap: int = 200
    injection: bool = False
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.query_token_cap < 1 or self.passage_token_cap < 1:
            raise ValueError("token caps must be >= 1")


def truncate_tokens(text: str, cap: int) -> str:
    """First *cap* whitespace-delimited tokens, rejoined with single spaces."""
    return " ".join(text.split()[:cap])


def build_input(query: str, passage: str, score_token: str | None,
                cfg: RerankConfig, pair_id: str = "") -> ScorerInput:
    """Package one truncated pair; requires a token when injection is on."""
    if cfg.injection and score_token is None:
        raise ValueError("injection is enabled but no score token was provided")
    return ScorerInput(
        pair_id=pair_id,
        query_text=truncate_tokens(query, cfg.query_token_cap),
        passage_text=truncate_tokens(passage, cfg.passage_token_cap),
        score_token=score_token if cfg.injection else None,
    )


def _word_form(token: str) -> str:
    """Case-folded, punctuation-stripped comparison form of a whitespace token."""
    return "".join(ch for ch in token.casefold() if ch.isalnum())


def mask_non_query_words(query: str, passage: str,
                         mask_literal: str = MASK_LITERAL) -> str:
    """Replace passage words that do not occur in the query with the mask literal.

    Matching compares case-folded, punctuation-stripped word forms;
    punctuation-only tokens are kept verbatim.
    """
    query_forms = {_word_form(t) for t in query.split()} - {""}
    out = []
    for token in passage.split():
        form = _word_form(token)
        out.append(token if form == "" or form in query_forms else mask_literal)
    return " ".join(out)


def _token_set(text: str) -> set[str]:
    return {_word_form(t) for t in text.split()} - {""}


def synthetic_score(inp: ScorerInput, use_pair_hash: bool = False) -> float:
    """Deterministic test-double score in [0, 1].

    0.5 * Jaccard(query, passage token sets) + min(0.4, token/1000), plus an
    optional 0.1 * 1-bit hash of the pair id (off by default). Monotone in
    both word overlap and the injected token; negative tokens floor at 0.
    """
    q = _token_set(inp.query_text)
    p = _token_set(inp.passage_text)
    union = q | p
    jaccard = len(q & p) / len(union) if union else 0.0
    try:
        token_value = int(inp.score_token) if inp.score_token is not None else 0
    except ValueError:
        token_value = 0
    score = 0.5 * jaccard + min(0.4, token_value / 1000.0)
    if use_pair_hash:
        score += 0.1 * (zlib.crc32(inp.pair_id.encode("utf-8")) & 1)
    return min(1.0, max(0.0, score))


class SyntheticScorer:
    """In-process deterministic scorer; the reference gateway for tests and demos."""

    kind = "synthetic"

    def __init__(self, batch_size: int = 64, use_pair_hash: bool = False):
        self.batch_size = batch_size
        self.use_pair_hash = use_pair_hash

    def score_batch(self, inputs: Sequence[ScorerInput]) -> dict[str, float]:
        return {inp.pair_id: synthetic_score(inp, self.use_pair_hash) for inp in inputs}

    def close(self) -> None:
        pass


def rerank(query_text: str, candidates: RankedList, scorer, cfg: RerankConfig,
           passages: Mapping[str, str] | Callable[[str], str],
           mask_exact: bool = False) -> RankedList:
    """Score the top cfg.depth candidates and re-sort by scorer score.

    With injection on, each candidate's token is its BM25 score pushed
    through cfg.normalization (local statistics come from the candidate
    list itself). Output is a permutation of the top-depth input; a failed
    batch raises TransportError rather than returning partial results.
    """
    lookup = passages.__getitem__ if hasattr(passages, "__getitem__") else passages
    head = candidates.entries[: cfg.depth]

    tokens: list[str | None]
    if cfg.injection:
        tokens = list(tokens_for_scores([s for _, s in head], cfg.normalization))
    else:
        tokens = [None] * len(head)

    query_for_mask = truncate_tokens(query_text, cfg.query_token_cap)
    inputs = []
    pair_doc_ids: dict[str, str] = {}
    for (doc_id, _), token in zip(head, tokens):
        try:
            passage = lookup(doc_id)
        except KeyError:
            raise DataFormatError(
                f"candidate doc_id {doc_id!r} has no passage text"
            ) from None
        if mask_exact:
            passage = mask_non_query_words(query_for_mask, passage)
        pair_id = f"{candidates.query_id}#{doc_id}"
        pair_doc_ids[pair_id] = doc_id
        inputs.append(build_input(query_text, passage, token, cfg, pair_id=pair_id))

    scores = score_in_batches(scorer, inputs)
    entries = sort_entries(
        (pair_doc_ids[inp.pair_id], scores[inp.pair_id]) for inp in inputs
    )
    return RankedList(candidates.query_id, entries)


def score_in_batches(scorer, inputs: Sequence[ScorerInput]) -> dict[str, float]:
    """Batch through the scorer; results keyed by pair_id, so batching is free."""
    batch_size = max(1, int(getattr(scorer, "batch_size", 64)))
    scores: dict[str, float] = {}
    for lo in range(0, len(inputs), batch_size):
        batch = inputs[lo:lo + batch_size]
        result = scorer.score_batch(batch)
        missing = [inp.pair_id for inp in batch if inp.pair_id not in result]
        if missing:
            raise TransportError(
                f"scorer reply is missing {len(missing)} pair(s)", tuple(missing)
            )
        for inp in batch:
            scores[inp.pair_id] = float(result[inp.pair_id])
    return scores
