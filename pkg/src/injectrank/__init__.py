"""Two-stage text-retrieval toolkit.

BM25 first-stage retrieval over an in-memory inverted index, score-token
injection for cross-encoder re-rankers (with the full normalization and
representation suite), score fusion ensembles, and TREC-style evaluation.
"""

from .ensemble import FusionConfig, NBModel, fuse, fuse_runs, nb_fit, nb_predict, sweep_alpha
from .errors import (
    DataFormatError,
    DegenerateStatsError,
    InjectRankError,
    TransportError,
)
from .evaluate import (
    EvalReport,
    OverlapResult,
    classify_query_type,
    evaluate_run,
    map_at_k,
    mrr_at_k,
    ndcg_at_k,
    overlap_at_k,
    paired_ttest_bonferroni,
    per_type_report,
)
from .gateway import HttpScorer, StdioScorer, make_scorer
from .lexical import (
    BM25Params,
    InvertedIndex,
    RankedList,
    TokenizerConfig,
    bm25_score,
    build_index,
    retrieve_topk,
    rsj_weight,
    tokenize,
)
from .normalize import (
    NormalizationConfig,
    ScoreStats,
    collect_local_stats,
    normalize,
    score_token,
    to_integer_token,
    tokens_for_scores,
)
from .pipeline import (
    RerankConfig,
    ScorerInput,
    SyntheticScorer,
    build_input,
    mask_non_query_words,
    rerank,
    synthetic_score,
    truncate_tokens,
)

__version__ = "0.1.0"
