"""BM25 score representations for injection: normalization, scope, and token form.

Methods: min-max, standardization (z-score), sum, or the original score.
Min-max and standardization run with either per-query (local) statistics or
fixed global defaults; sum is inherently per-query. The normalized value is
rendered either as a float token (two decimals, truncated toward zero) or an
integer token (value times 100, decimals discarded).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal
from typing import Sequence

from .errors import DegenerateStatsError

logger = logging.getLogger(__name__)

METHODS = ("minmax", "standard", "sum", "original")
SCOPES = ("local", "global")
REPRESENTATIONS = ("float", "int")

# Widely-used global defaults for BM25 (min, max, mean, std).
DEFAULT_GLOBAL_STATS = (0.0, 50.0, 42.0, 6.0)


@dataclass(frozen=True)
class NormalizationConfig:
    """Method x scope x token representation.

    Defaults give the best-performing variant: global min-max rendered as an
    integer token.
    """

    method: str = "minmax"
    scope: str = "global"
    representation: str = "int"
    global_stats: tuple[float, float, float, float] = DEFAULT_GLOBAL_STATS

    def __post_init__(self):
        object.__setattr__(self, "global_stats", tuple(float(v) for v in self.global_stats))
        if len(self.global_stats) != 4:
            raise ValueError("global_stats must be (min, max, mean, std)")
        if self.method not in METHODS:
            raise ValueError(f"unknown normalization method {self.method!r}")
        if self.scope not in SCOPES:
            raise ValueError(f"unknown scope {self.scope!r}")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.method == "sum" and self.scope != "local":
            raise ValueError("sum normalization is local-only")
        gmin, gmax, _, gstd = self.global_stats
        if self.scope == "global" and self.method == "minmax" and not gmax > gmin:
            raise ValueError("global min-max requires max > min")
        if self.scope == "global" and self.method == "standard" and not gstd > 0:
            raise ValueError("global standardization requires std > 0")


@dataclass(frozen=True)
class ScoreStats:
    """Statistics over one query's ranked-list scores (std is population std)."""

    min: float
    max: float
    mean: float
    std: float
    sum: float


def collect_local_stats(scores: Sequence[float]) -> ScoreStats:
    """Exact sample statistics over a non-empty score list."""
    if hasattr(scores, "entries"):  # accept a RankedList directly
        scores = [s for _, s in scores.entries]
    if not len(scores):
        raise DegenerateStatsError("cannot collect statistics over an empty ranked list")
    n = len(scores)
    total = sum(scores)
    mean = total / n
    var = sum((s - mean) ** 2 for s in scores) / n
    return ScoreStats(min=min(scores), max=max(scores), mean=mean,
                      std=var ** 0.5, sum=total)


def normalize(score: float, cfg: NormalizationConfig,
              stats: ScoreStats | None = None) -> float:
    """Map a raw score through the configured normalizer.

    Local scope and sum need per-list *stats*; global scope reads
    cfg.global_stats. Degenerate local lists (max == min, std == 0, or
    sum == 0) raise DegenerateStatsError for the caller to handle.
    """
    if cfg.method == "original":
        return score

    if cfg.method == "sum":
        _require_stats(stats, cfg)
        if stats.sum == 0:
            raise DegenerateStatsError("sum normalization over a zero-sum list")
        return score / stats.sum

    if cfg.scope == "global":
        gmin, gmax, gmean, gstd = cfg.global_stats
        if cfg.method == "minmax":
            return (score - gmin) / (gmax - gmin)
        return (score - gmean) / gstd

    _require_stats(stats, cfg)
    if cfg.method == "minmax":
        if stats.max == stats.min:
            raise DegenerateStatsError("local min-max over a constant list")
        return (score - stats.min) / (stats.max - stats.min)
    if stats.std == 0:
        raise DegenerateStatsError("local standardization over a constant list")
    return (score - stats.mean) / stats.std


def _require_stats(stats: ScoreStats | None, cfg: NormalizationConfig) -> None:
    if stats is None:
        raise ValueError(f"{cfg.method}/{cfg.scope} normalization needs per-list stats")


def _shortest_decimal(value: float) -> Decimal:
    # repr() gives the shortest round-tripping form, so 98/50 truncates to
    # 196 rather than 195 and 0.29 * 100 to 29 rather than 28.
    return Decimal(repr(float(value)))


def to_integer_token(normalized: float) -> str:
    """Decimal string of trunc(normalized * 100), truncation toward zero."""
    scaled = _shortest_decimal(normalized).scaleb(2)
    quantized = scaled.to_integral_value(rounding=ROUND_DOWN)
    result = int(quantized)
    return str(result)


def to_float_token(normalized: float) -> str:
    """Two-decimal string, truncated toward zero (e.g. 7.4567 -> '7.45')."""
    quantized = _shortest_decimal(normalized).quantize(Decimal("0.01"), rounding=ROUND_DOWN)
    if quantized == 0:
        quantized = abs(quantized)  # avoid "-0.00"
    return f"{quantized:.2f}"


def score_token(score: float, cfg: NormalizationConfig,
                stats: ScoreStats | None = None) -> str:
    """Stringified (normalized) score exactly as it is injected."""
    value = normalize(score, cfg, stats)
    if cfg.representation == "int":
        return to_integer_token(value)
    return to_float_token(value)


def tokens_for_scores(scores: Sequence[float], cfg: NormalizationConfig) -> list[str]:
    """Tokens for a whole ranked list, computing local statistics once.

    A degenerate list (constant scores or zero sum) carries no ranking
    signal: it is logged and every token falls back to "0".
    """
    scores = list(scores)
    if not scores:
        return []
    stats = None
    if cfg.method == "sum" or (cfg.scope == "local" and cfg.method != "original"):
        stats = collect_local_stats(scores)
    try:
        return [score_token(s, cfg, stats) for s in scores]
    except DegenerateStatsError as exc:
        logger.warning("degenerate score list (%s); injecting '0' tokens", exc)
        return ["0"] * len(scores)
