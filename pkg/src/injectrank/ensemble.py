"""Fusion of first-stage and re-ranker scores.

Sum and max combine raw scores; weighted-sum interpolates
``alpha * lexical + (1 - alpha) * neural`` after min-max normalizing the
lexical score within each query's list (the neural score already lives in
[0, 1]). A two-feature Gaussian Naive Bayes is the one trained ensemble.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataFormatError, DegenerateStatsError
from .lexical import RankedList, sort_entries
from .normalize import ScoreStats, collect_local_stats

logger = logging.getLogger(__name__)

FUSION_METHODS = ("sum", "max", "weighted_sum", "naive_bayes")

VARIANCE_FLOOR = 1e-9


@dataclass(frozen=True)
class FusionConfig:
    method: str = "weighted_sum"
    alpha: float = 0.1  # tuned interpolation weight; only weighted_sum reads it

    def __post_init__(self):
        if self.method not in FUSION_METHODS:
            raise ValueError(f"unknown fusion method {self.method!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


def fuse(s_lex_norm: float, s_neural: float, cfg: FusionConfig) -> float:
    """Combine one normalized lexical score with one neural score."""
    if cfg.method == "sum":
        return s_lex_norm + s_neural
    if cfg.method == "max":
        return max(s_lex_norm, s_neural)
    if cfg.method == "weighted_sum":
        return cfg.alpha * s_lex_norm + (1.0 - cfg.alpha) * s_neural
    raise ValueError("naive_bayes fusion scores through nb_predict, not fuse")


def _normalized_lex_scores(ranked: RankedList) -> dict[str, float]:
    """Per-query local min-max of the lexical list; constant lists map to 0."""
    scores = [s for _, s in ranked.entries]
    stats = collect_local_stats(scores)
    if stats.max == stats.min:
        logger.warning(
            "constant lexical scores for query %s; normalized to 0", ranked.query_id
        )
        return {doc_id: 0.0 for doc_id, _ in ranked.entries}
    span = stats.max - stats.min
    return {doc_id: (s - stats.min) / span for doc_id, s in ranked.entries}


def fuse_runs(run_lex: Mapping[str, RankedList], run_neural: Mapping[str, RankedList],
              cfg: FusionConfig, nb_model: "NBModel | None" = None) -> dict[str, RankedList]:
    """Fuse two runs query by query over the union of their documents.

    A document present in only one run takes that run's per-query minimum as
    its missing score. Both runs must cover the same queries.
    """
    if set(run_lex) != set(run_neural):
        only_lex = sorted(set(run_lex) - set(run_neural))
        only_neural = sorted(set(run_neural) - set(run_lex))
        raise DataFormatError(
            "runs cover different queries "
            f"(only in first: {only_lex[:5]}, only in second: {only_neural[:5]})"
        )
    if cfg.method == "naive_bayes" and nb_model is None:
        raise ValueError("naive_bayes fusion requires a fitted model")

    fused: dict[str, RankedList] = {}
    for qid in sorted(run_lex):
        lex, neural = run_lex[qid], run_neural[qid]
        lex_raw = dict(lex.entries)
        neural_raw = dict(neural.entries)
        if not lex_raw or not neural_raw:
            raise DataFormatError(f"query {qid!r} has an empty ranked list")
        lex_min = min(lex_raw.values())
        neural_min = min(neural_raw.values())

        if cfg.method == "weighted_sum":
            lex_scores = _normalized_lex_scores(lex)
            lex_missing = 0.0  # the imputed minimum min-maxes to 0
        else:
            lex_scores = lex_raw
            lex_missing = lex_min

        pairs = []
        for doc_id in set(lex_raw) | set(neural_raw):
            a = lex_scores.get(doc_id, lex_missing)
            b = neural_raw.get(doc_id, neural_min)
            if cfg.method == "naive_bayes":
                score = nb_predict(nb_model, lex_raw.get(doc_id, lex_min), b)
            else:
                score = fuse(a, b, cfg)
            pairs.append((doc_id, score))
        fused[qid] = RankedList(qid, sort_entries(pairs))
    return fused


def sweep_alpha(run_lex: Mapping[str, RankedList], run_neural: Mapping[str, RankedList],
                qrels: Mapping[str, Mapping[str, int]], grid: Sequence[float],
                metrics: Sequence[str] = ("mrr@10",)) -> list[tuple[float, str, float]]:
    """Weighted-sum fusion evaluated at every alpha in *grid*.

    Returns (alpha, metric, value) rows, one per metric per grid point.
    """
    from .evaluate import evaluate_run  # local import to avoid a cycle

    if not set(run_lex) & set(run_neural):
        raise DataFormatError("runs share no queries; nothing to sweep")
    rows: list[tuple[float, str, float]] = []
    for alpha in grid:
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"grid alpha {alpha} outside [0, 1]")
        fused = fuse_runs(run_lex, run_neural,
                          FusionConfig(method="weighted_sum", alpha=alpha))
        report = evaluate_run(fused, qrels, metrics=metrics)
        for metric in metrics:
            rows.append((alpha, metric, report.aggregates[metric]))
    return rows


@dataclass(frozen=True)
class NBModel:
    """Gaussian class-conditionals for the (lexical, neural) feature pair.

    Index 0 holds the non-relevant class, index 1 the relevant class.
    """

    means: np.ndarray      # shape (2, 2): [class, feature]
    variances: np.ndarray  # shape (2, 2), floored at VARIANCE_FLOOR
    priors: np.ndarray     # shape (2,), sums to 1


def nb_fit(samples: Iterable[tuple[float, float, int]]) -> NBModel:
    """Fit per-class feature means/variances and priors from labeled pairs."""
    samples = list(samples)
    if not samples:
        raise ValueError("cannot fit a classifier on no samples")
    features = np.array([(a, b) for a, b, _ in samples], dtype=np.float64)
    labels = np.array([lbl for _, _, lbl in samples], dtype=np.int64)
    if set(np.unique(labels)) != {0, 1}:
        raise ValueError("training data must contain both classes (labels 0 and 1)")

    means = np.empty((2, 2))
    variances = np.empty((2, 2))
    priors = np.empty(2)
    for cls in (0, 1):
        rows = features[labels == cls]
        means[cls] = rows.mean(axis=0)
        variances[cls] = np.maximum(rows.var(axis=0), VARIANCE_FLOOR)
        priors[cls] = len(rows) / len(samples)
    return NBModel(means=means, variances=variances, priors=priors)


def nb_predict(model: NBModel, s_lex: float, s_neural: float) -> float:
    """Posterior probability of the relevant class, computed in log space."""
    x = np.array([s_lex, s_neural], dtype=np.float64)
    log_joint = np.empty(2)
    for cls in (0, 1):
        var = model.variances[cls]
        log_pdf = -0.5 * (np.log(2.0 * math.pi * var) + (x - model.means[cls]) ** 2 / var)
        log_joint[cls] = math.log(model.priors[cls]) + log_pdf.sum()
    # log-sum-exp keeps extreme outliers finite; the clamp keeps the
    # posterior inside the open interval even when exp() underflows.
    peak = log_joint.max()
    weights = np.exp(log_joint - peak)
    posterior = float(weights[1] / weights.sum())
    return min(1.0 - 1e-12, max(1e-12, posterior))
