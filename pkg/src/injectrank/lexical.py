"""Tokenization, inverted-index construction, and BM25 top-k retrieval.

The index stores postings in CSR layout (term-major, document order) so the
per-query scoring loop can run through the numba/numpy kernels in
``_kernels``. A built index is immutable; concurrent read-only queries are
safe because scoring allocates its own accumulators.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from ._kernels import accumulate_bm25
from .errors import DataFormatError
from .stem import porter_stem

# Maximal alphanumeric runs; underscores and punctuation are separators.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TokenizerConfig:
    """Lexical analysis knobs. Splitting is always on non-alphanumeric boundaries."""

    lowercase: bool = True
    stemming: str = "none"  # "none" | "porter"
    stopwords: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.stemming not in ("none", "porter"):
            raise ValueError(f"unknown stemming mode {self.stemming!r}")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))


def tokenize(text: str, cfg: TokenizerConfig = TokenizerConfig()) -> list[str]:
    """Deterministic token sequence for *text*; empty input yields []."""
    if cfg.lowercase:
        text = text.lower()
    tokens = _TOKEN_RE.findall(text)
    if cfg.stopwords:
        tokens = [t for t in tokens if t not in cfg.stopwords]
    if cfg.stemming == "porter":
        tokens = [porter_stem(t) for t in tokens]
    return tokens


@dataclass(frozen=True)
class BM25Params:
    """k1 saturates term frequency; b scales document-length normalization.

    Defaults are the Anserini-documented MSMARCO-passage tuning.
    """

    k1: float = 0.82
    b: float = 0.68

    def __post_init__(self):
        if not self.k1 > 0:
            raise ValueError(f"k1 must be positive, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")


@dataclass
class RankedList:
    """Per-query ranking: entries ordered by score descending, doc_id ascending on ties."""

    query_id: str
    entries: list[tuple[str, float]] = field(default_factory=list)

    @classmethod
    def from_pairs(cls, query_id: str, pairs: Iterable[tuple[str, float]]) -> "RankedList":
        entries = sort_entries(pairs)
        seen: set[str] = set()
        for doc_id, _ in entries:
            if doc_id in seen:
                raise ValueError(f"duplicate doc_id {doc_id!r} in ranked list for query {query_id!r}")
            seen.add(doc_id)
        return cls(query_id, entries)

    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.entries]

    def top(self, k: int) -> "RankedList":
        return RankedList(self.query_id, self.entries[:k])

    def __len__(self) -> int:
        return len(self.entries)


def sort_entries(pairs: Iterable[tuple[str, float]]) -> list[tuple[str, float]]:
    """Score descending, doc_id ascending (plain string order) on ties."""
    return sorted(pairs, key=lambda e: (-e[1], e[0]))


class InvertedIndex:
    """Term -> postings map with the collection statistics BM25 needs.

    Construction goes through :func:`build_index`; instances are immutable
    afterwards. Raw document text is retained so re-rankers can fetch
    passages without a second corpus pass.
    """

    def __init__(self, tokenizer: TokenizerConfig, doc_ids: list[str],
                 doc_texts: list[str], doc_lengths: np.ndarray,
                 terms: list[str], indptr: np.ndarray,
                 post_docs: np.ndarray, post_tfs: np.ndarray):
        self.tokenizer = tokenizer
        self._doc_ids = doc_ids
        self._doc_pos = {doc_id: i for i, doc_id in enumerate(doc_ids)}
        self._doc_texts = doc_texts
        self._doc_lengths = np.ascontiguousarray(doc_lengths, dtype=np.float64)
        self._terms = terms
        self._term_ids = {t: i for i, t in enumerate(terms)}
        self._indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self._post_docs = np.ascontiguousarray(post_docs, dtype=np.int64)
        self._post_tfs = np.ascontiguousarray(post_tfs, dtype=np.float64)
        self._avgdl = float(self._doc_lengths.mean()) if len(doc_ids) else 0.0
        # Rank of each doc in ascending doc_id order, for the tie rule.
        order = sorted(range(len(doc_ids)), key=doc_ids.__getitem__)
        ranks = np.empty(len(doc_ids), dtype=np.int64)
        for rank, pos in enumerate(order):
            ranks[pos] = rank
        self._doc_order = ranks

    @property
    def doc_count(self) -> int:
        return len(self._doc_ids)

    @property
    def avg_doc_length(self) -> float:
        return self._avgdl

    @property
    def vocab_size(self) -> int:
        return len(self._terms)

    @property
    def doc_ids(self) -> list[str]:
        return list(self._doc_ids)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._doc_pos

    def doc_length(self, doc_id: str) -> int:
        return int(self._doc_lengths[self._doc_pos[doc_id]])

    def doc_text(self, doc_id: str) -> str:
        return self._doc_texts[self._doc_pos[doc_id]]

    def df(self, term: str) -> int:
        tid = self._term_ids.get(term)
        if tid is None:
            return 0
        return int(self._indptr[tid + 1] - self._indptr[tid])

    def postings(self, term: str) -> list[tuple[str, int]]:
        tid = self._term_ids.get(term)
        if tid is None:
            return []
        lo, hi = self._indptr[tid], self._indptr[tid + 1]
        return [
            (self._doc_ids[int(d)], int(tf))
            for d, tf in zip(self._post_docs[lo:hi], self._post_tfs[lo:hi])
        ]

    def term_frequency(self, term: str, doc_id: str) -> int:
        tid = self._term_ids.get(term)
        if tid is None:
            return 0
        pos = self._doc_pos[doc_id]  # raises KeyError for unknown docs
        lo, hi = self._indptr[tid], self._indptr[tid + 1]
        j = np.searchsorted(self._post_docs[lo:hi], pos)
        if j < hi - lo and self._post_docs[lo + j] == pos:
            return int(self._post_tfs[lo + j])
        return 0

    def stats(self) -> dict:
        return {
            "doc_count": self.doc_count,
            "avg_doc_length": self.avg_doc_length,
            "vocab_size": self.vocab_size,
        }

    def save(self, path: str) -> None:
        """Persist to a single .npz file with an embedded format version."""
        meta = {
            "format_version": INDEX_FORMAT_VERSION,
            "tokenizer": {
                "lowercase": self.tokenizer.lowercase,
                "stemming": self.tokenizer.stemming,
                "stopwords": sorted(self.tokenizer.stopwords),
            },
        }
        with open(path, "wb") as fh:
            np.savez_compressed(
                fh,
                meta=json.dumps(meta),
                doc_ids=json.dumps(self._doc_ids),
                doc_texts=json.dumps(self._doc_texts),
                terms=json.dumps(self._terms),
                doc_lengths=self._doc_lengths,
                indptr=self._indptr,
                post_docs=self._post_docs,
                post_tfs=self._post_tfs,
            )

    @classmethod
    def load(cls, path: str) -> "InvertedIndex":
        try:
            with np.load(path, allow_pickle=False) as data:
                meta = json.loads(str(data["meta"]))
                version = meta.get("format_version")
                if version != INDEX_FORMAT_VERSION:
                    raise DataFormatError(
                        f"unsupported index format version {version!r}", path=path
                    )
                tok = meta["tokenizer"]
                cfg = TokenizerConfig(
                    lowercase=tok["lowercase"],
                    stemming=tok["stemming"],
                    stopwords=frozenset(tok["stopwords"]),
                )
                return cls(
                    tokenizer=cfg,
                    doc_ids=json.loads(str(data["doc_ids"])),
                    doc_texts=json.loads(str(data["doc_texts"])),
                    doc_lengths=data["doc_lengths"],
                    terms=json.loads(str(data["terms"])),
                    indptr=data["indptr"],
                    post_docs=data["post_docs"],
                    post_tfs=data["post_tfs"],
                )
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise DataFormatError(f"cannot read index: {exc}", path=path) from exc


def build_index(docs: Iterable[tuple[str, str]],
                cfg: TokenizerConfig = TokenizerConfig()) -> InvertedIndex:
    """Single pass over (doc_id, text) records; doc_ids must be unique."""
    doc_ids: list[str] = []
    doc_texts: list[str] = []
    doc_lengths: list[int] = []
    # term -> parallel (doc position, tf) lists; doc positions arrive sorted.
    postings: dict[str, tuple[list[int], list[int]]] = {}
    seen: set[str] = set()

    for doc_id, text in docs:
        if doc_id in seen:
            raise DataFormatError(f"duplicate doc_id {doc_id!r}")
        seen.add(doc_id)
        pos = len(doc_ids)
        tokens = tokenize(text, cfg)
        doc_ids.append(doc_id)
        doc_texts.append(text)
        doc_lengths.append(len(tokens))
        for term, tf in Counter(tokens).items():
            docs_list, tfs_list = postings.setdefault(term, ([], []))
            docs_list.append(pos)
            tfs_list.append(tf)

    terms = sorted(postings)
    indptr = np.zeros(len(terms) + 1, dtype=np.int64)
    for i, term in enumerate(terms):
        indptr[i + 1] = indptr[i] + len(postings[term][0])
    total = int(indptr[-1])
    post_docs = np.empty(total, dtype=np.int64)
    post_tfs = np.empty(total, dtype=np.float64)
    for i, term in enumerate(terms):
        docs_list, tfs_list = postings[term]
        post_docs[indptr[i]:indptr[i + 1]] = docs_list
        post_tfs[indptr[i]:indptr[i + 1]] = tfs_list

    return InvertedIndex(
        tokenizer=cfg,
        doc_ids=doc_ids,
        doc_texts=doc_texts,
        doc_lengths=np.asarray(doc_lengths, dtype=np.float64),
        terms=terms,
        indptr=indptr,
        post_docs=post_docs,
        post_tfs=post_tfs,
    )


def rsj_weight(index: InvertedIndex, term: str) -> float:
    """Robertson/Sparck Jones weight ln((N - df + 0.5) / (df + 0.5)).

    Terms absent from the index have df = 0 and the formula still applies;
    negative weights (df > N/2) are kept as-is.
    """
    df = index.df(term)
    return math.log((index.doc_count - df + 0.5) / (df + 0.5))


def _dedupe(tokens: Sequence[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for t in tokens:
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def bm25_score(index: InvertedIndex, query_tokens: Sequence[str], doc_id: str,
               params: BM25Params = BM25Params()) -> float:
    """Sum of per-term contributions over terms shared by query and document.

    Repeated query terms contribute once (the sum runs over the term set).
    Unknown doc_id raises KeyError.
    """
    if doc_id not in index:
        raise KeyError(doc_id)
    dl = float(index.doc_length(doc_id))
    avgdl = index.avg_doc_length
    score = 0.0
    for term in _dedupe(query_tokens):
        tf = float(index.term_frequency(term, doc_id))
        if tf == 0.0:
            continue
        w = rsj_weight(index, term)
        # Mirrors the kernel expression exactly so scores agree bitwise.
        denom = tf + params.k1 * ((1.0 - params.b) + params.b * (dl / avgdl))
        score += w * (tf / denom)
    return score


def retrieve_topk(index: InvertedIndex, query: str, k: int = 1000,
                  params: BM25Params = BM25Params(),
                  query_id: str | None = None,
                  _kernel=None) -> RankedList:
    """Top-k BM25 retrieval over every document sharing a term with the query.

    Results are sorted score-descending with ties broken by ascending
    doc_id. ``_kernel`` overrides the scoring kernel (benchmarks only).
    """
    if k <= 0:
        raise ValueError(f"k must be >= 1, got {k}")
    if index.doc_count == 0:
        raise ValueError("retrieval requires a non-empty index")
    qid = query if query_id is None else query_id

    terms = [t for t in _dedupe(tokenize(query, index.tokenizer)) if index.df(t) > 0]
    if not terms:
        return RankedList(qid, [])

    tids = np.array([index._term_ids[t] for t in terms], dtype=np.int64)
    weights = np.array([rsj_weight(index, t) for t in terms], dtype=np.float64)
    starts = index._indptr[tids]
    ends = index._indptr[tids + 1]
    scores = np.zeros(index.doc_count, dtype=np.float64)
    touched = np.zeros(index.doc_count, dtype=np.bool_)

    kernel = _kernel if _kernel is not None else accumulate_bm25
    kernel(starts, ends, index._post_docs, index._post_tfs, weights,
           index._doc_lengths, index.avg_doc_length, params.k1, params.b,
           scores, touched)

    cand = np.nonzero(touched)[0]
    order = np.lexsort((index._doc_order[cand], -scores[cand]))
    top = cand[order[:k]]
    entries = [(index._doc_ids[int(i)], float(scores[int(i)])) for i in top]
    return RankedList(qid, entries)
