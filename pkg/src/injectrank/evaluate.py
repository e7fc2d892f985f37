"""IR metrics, significance testing, query typing, and run-overlap analysis.

Metric conventions: a document is relevant when its grade is at or above
``rel_threshold`` (default 1); nDCG uses graded exponential gains. Queries
without relevance judgments (or with none meeting the threshold) are skipped
rather than zero-scored, matching standard TREC evaluation practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .lexical import RankedList

Qrels = dict[str, dict[str, int]]

QUERY_TYPES = ("ABBR", "LOC", "DESC", "HUM", "NUM", "ENTY", "UNKNOWN")

DEFAULT_METRICS = ("mrr@10", "ndcg@10", "map@1000")


def _relevant_docs(judgments: Mapping[str, int], rel_threshold: int) -> set[str]:
    return {d for d, g in judgments.items() if g >= rel_threshold}


def mrr_at_k(run: RankedList, qrels: Mapping[str, Mapping[str, int]],
             k: int = 10, rel_threshold: int = 1) -> float | None:
    """Reciprocal rank of the first relevant document in the top k, else 0.

    None (skip) when the query has no judged-relevant documents at all.
    """
    judgments = qrels.get(run.query_id)
    if not judgments or not _relevant_docs(judgments, rel_threshold):
        return None
    for rank, (doc_id, _) in enumerate(run.entries[:k], start=1):
        if judgments.get(doc_id, 0) >= rel_threshold:
            return 1.0 / rank
    return 0.0


def ndcg_at_k(run: RankedList, qrels: Mapping[str, Mapping[str, int]],
              k: int = 10) -> float | None:
    """DCG@k / IDCG@k with gain (2^grade - 1) / log2(rank + 1).

    Queries with no positively-graded documents have no ideal ranking and
    are skipped (None).
    """
    judgments = qrels.get(run.query_id)
    if not judgments:
        return None
    grades = sorted((g for g in judgments.values() if g > 0), reverse=True)
    if not grades:
        return None
    dcg = 0.0
    for rank, (doc_id, _) in enumerate(run.entries[:k], start=1):
        grade = judgments.get(doc_id, 0)
        if grade > 0:
            dcg += (2.0 ** grade - 1.0) / math.log2(rank + 1)
    idcg = sum(
        (2.0 ** grade - 1.0) / math.log2(rank + 1)
        for rank, grade in enumerate(grades[:k], start=1)
    )
    return dcg / idcg


def map_at_k(run: RankedList, qrels: Mapping[str, Mapping[str, int]],
             k: int = 1000, rel_threshold: int = 1) -> float | None:
    """Average precision at cutoff k over the query's total relevant count."""
    judgments = qrels.get(run.query_id)
    if not judgments:
        return None
    relevant = _relevant_docs(judgments, rel_threshold)
    if not relevant:
        return None
    hits = 0
    precision_sum = 0.0
    for rank, (doc_id, _) in enumerate(run.entries[:k], start=1):
        if doc_id in relevant:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / len(relevant)


def parse_metric(name: str):
    """'mrr@10' -> (callable, cutoff); supports mrr, ndcg and map at any cutoff."""
    base, _, cut = name.lower().partition("@")
    fns = {"mrr": mrr_at_k, "ndcg": ndcg_at_k, "map": map_at_k}
    if base not in fns or not cut.isdigit() or int(cut) < 1:
        raise ValueError(f"unknown metric {name!r} (expected e.g. mrr@10, ndcg@10, map@1000)")
    return fns[base], int(cut)


@dataclass
class SignificanceResult:
    comparison: str
    t_statistic: float | None
    p_value: float | None
    alpha: float
    num_comparisons: int
    threshold: float
    significant: bool
    zero_variance: bool = False


@dataclass
class EvalReport:
    """Per-query and aggregate metric values, plus any significance annotations."""

    metrics: tuple[str, ...]
    per_query: dict[str, dict[str, float]]  # metric -> query_id -> value
    aggregates: dict[str, float]
    evaluated_queries: list[str]
    skipped_queries: list[str]
    significance: list[SignificanceResult] = field(default_factory=list)


def evaluate_run(runs: Mapping[str, RankedList], qrels: Mapping[str, Mapping[str, int]],
                 metrics: Sequence[str] = DEFAULT_METRICS,
                 rel_threshold: int = 1) -> EvalReport:
    """Evaluate every query in *runs*; aggregates are means over evaluated queries."""
    metrics = tuple(metrics)
    per_query: dict[str, dict[str, float]] = {m: {} for m in metrics}
    evaluated: list[str] = []
    skipped: list[str] = []
    for qid in sorted(runs):
        run = runs[qid]
        any_value = False
        for name in metrics:
            fn, cut = parse_metric(name)
            if fn is ndcg_at_k:
                value = fn(run, qrels, k=cut)
            else:
                value = fn(run, qrels, k=cut, rel_threshold=rel_threshold)
            if value is not None:
                per_query[name][qid] = value
                any_value = True
        (evaluated if any_value else skipped).append(qid)
    aggregates = {
        m: (sum(per_query[m].values()) / len(per_query[m]) if per_query[m] else 0.0)
        for m in metrics
    }
    return EvalReport(metrics=metrics, per_query=per_query, aggregates=aggregates,
                      evaluated_queries=evaluated, skipped_queries=skipped)


def paired_ttest_bonferroni(per_query_a: Sequence[float], per_query_b: Sequence[float],
                            num_comparisons: int = 1, alpha: float = 0.05,
                            comparison: str = "a-vs-b") -> SignificanceResult:
    """Two-sided paired t-test with a Bonferroni-corrected threshold.

    Vectors must be aligned on the same queries. A zero-variance difference
    vector (e.g. identical runs) has no defined p-value and is flagged.
    """
    a = np.asarray(per_query_a, dtype=np.float64)
    b = np.asarray(per_query_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired vectors must have equal length")
    if a.size < 2:
        raise ValueError("paired t-test needs at least 2 observations")
    threshold = alpha / max(1, num_comparisons)
    diff = a - b
    if np.var(diff) == 0.0:
        if diff[0] == 0.0:
            return SignificanceResult(comparison, None, None, alpha,
                                      num_comparisons, threshold,
                                      significant=False, zero_variance=True)
        # constant nonzero difference: t is infinite, p -> 0
        return SignificanceResult(comparison, math.inf if diff[0] > 0 else -math.inf,
                                  0.0, alpha, num_comparisons, threshold,
                                  significant=True, zero_variance=True)
    t_stat, p_value = scipy_stats.ttest_rel(a, b)
    return SignificanceResult(comparison, float(t_stat), float(p_value), alpha,
                              num_comparisons, threshold,
                              significant=bool(p_value < threshold))


# --- Query-type classification -------------------------------------------------

_NUM_HOW_CUES = {"many", "much", "long", "old", "far"}
_NUM_CUE_WORDS = {
    "number", "percentage", "percent", "cost", "price", "population",
    "temperature", "average", "year", "date", "age", "salary", "income",
    "distance", "height", "weight", "speed",
}
_ENTY_CUES = {
    "color", "colour", "animal", "breed", "fruit", "flower", "instrument",
    "language", "team", "movie", "film", "book", "song", "sport", "currency",
    "religion", "food", "dish", "plant", "metal", "element", "drug", "brand",
    "kind", "type", "sort", "name",
}
_DESC_SECOND = {"is", "are", "was", "were", "does", "do", "did"}
_HOW_DESC_SECOND = {"do", "does", "did", "to", "can", "could", "should", "would"}


def classify_query_type(query: str) -> str:
    """Deterministic rule cascade over leading tokens and cue words.

    Returns one of QUERY_TYPES; UNKNOWN when no rule fires.
    """
    raw_tokens = query.split()
    tokens = [t.strip(".,;:!?\"'()").lower() for t in raw_tokens]
    tokens = [t for t in tokens if t]
    if not tokens:
        return "UNKNOWN"
    first = tokens[0]
    second = tokens[1] if len(tokens) > 1 else ""
    token_set = set(tokens)
    text = " ".join(tokens)

    # Abbreviation cues outrank everything: "stand for", the word itself,
    # or a what-question about an all-caps token.
    if "stand for" in text or "stands for" in text:
        return "ABBR"
    if token_set & {"abbreviation", "abbreviations", "acronym", "acronyms"}:
        return "ABBR"
    if first in ("what", "which") and any(
        t.isupper() and len(t) >= 2 and t.isalpha() for t in raw_tokens[1:]
    ):
        return "ABBR"

    if first in ("who", "whom", "whose"):
        return "HUM"
    if first == "where":
        return "LOC"

    if first == "when":
        return "NUM"
    if first == "how" and second in _NUM_HOW_CUES:
        return "NUM"
    if first in ("what", "which") and token_set & _NUM_CUE_WORDS:
        return "NUM"

    if first in ("what", "which") and len(tokens) > 1:
        window = set(tokens[1:4])
        if window & _ENTY_CUES:
            return "ENTY"

    if first == "what" and second in _DESC_SECOND:
        return "DESC"
    if first == "which" and second in _DESC_SECOND:
        return "DESC"
    if first == "how" and second in _HOW_DESC_SECOND:
        return "DESC"
    if first in ("why", "define", "describe", "explain"):
        return "DESC"

    return "UNKNOWN"


def per_type_report(runs: Mapping[str, RankedList], queries: Mapping[str, str],
                    qrels: Mapping[str, Mapping[str, int]],
                    metric: str = "mrr@10",
                    rel_threshold: int = 1) -> list[tuple[str, int, float]]:
    """(type, query count, mean metric) rows grouped by query type.

    UNKNOWN queries and queries without relevant documents are left out;
    rows appear in QUERY_TYPES order.
    """
    fn, cut = parse_metric(metric)
    groups: dict[str, list[float]] = {}
    for qid in sorted(runs):
        if qid not in queries:
            continue
        qtype = classify_query_type(queries[qid])
        if qtype == "UNKNOWN":
            continue
        if fn is ndcg_at_k:
            value = fn(runs[qid], qrels, k=cut)
        else:
            value = fn(runs[qid], qrels, k=cut, rel_threshold=rel_threshold)
        if value is None:
            continue
        groups.setdefault(qtype, []).append(value)
    return [
        (qtype, len(groups[qtype]), sum(groups[qtype]) / len(groups[qtype]))
        for qtype in QUERY_TYPES
        if qtype in groups
    ]


@dataclass(frozen=True)
class OverlapResult:
    """Shared-relevant-document overlap between two runs' top-k, as percentages."""

    micro: float  # pooled |A and B| / |A or B| over all queries
    macro: float  # mean of per-query overlaps (queries with empty unions skipped)
    queries: int


def overlap_at_k(run_a: Mapping[str, RankedList], run_b: Mapping[str, RankedList],
                 qrels: Mapping[str, Mapping[str, int]], k: int = 10,
                 rel_threshold: int = 1) -> OverlapResult:
    """Overlap of relevant documents ranked in the top k by both runs."""
    inter_total = 0
    union_total = 0
    per_query: list[float] = []
    counted = 0
    for qid in sorted(set(run_a) & set(run_b)):
        judgments = qrels.get(qid)
        if not judgments:
            continue
        relevant = _relevant_docs(judgments, rel_threshold)
        if not relevant:
            continue
        top_a = {d for d, _ in run_a[qid].entries[:k]} & relevant
        top_b = {d for d, _ in run_b[qid].entries[:k]} & relevant
        union = top_a | top_b
        counted += 1
        if not union:
            continue
        inter_total += len(top_a & top_b)
        union_total += len(union)
        per_query.append(len(top_a & top_b) / len(union))
    micro = 100.0 * inter_total / union_total if union_total else 0.0
    macro = 100.0 * sum(per_query) / len(per_query) if per_query else 0.0
    return OverlapResult(micro=micro, macro=macro, queries=counted)
