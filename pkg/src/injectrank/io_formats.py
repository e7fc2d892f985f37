"""Readers and writers for the corpus, qrels, run, and config file formats.

Collection and queries files are UTF-8 TSV, one ``id<TAB>text`` record per
line. Qrels are whitespace-separated ``qid iter docid grade``. Run files
follow the six-column ``qid Q0 docid rank score tag`` convention with
scores rendered at six decimals. The toolkit config is a single YAML
document with ``bm25``, ``normalization``, ``rerank``, ``fusion`` and
``scorer`` sections, all optional.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import yaml

from .ensemble import FusionConfig
from .errors import DataFormatError
from .lexical import BM25Params, RankedList, sort_entries
from .normalize import DEFAULT_GLOBAL_STATS, NormalizationConfig
from .pipeline import RerankConfig

logger = logging.getLogger(__name__)


def read_collection_tsv(path: str) -> Iterator[tuple[str, str]]:
    """Stream (doc_id, text) records; duplicate ids and tab-less lines error out."""
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if "\t" not in line:
                raise DataFormatError("expected 'id<TAB>text'", path=path, line=lineno)
            doc_id, text = line.split("\t", 1)
            if not doc_id:
                raise DataFormatError("empty id field", path=path, line=lineno)
            if doc_id in seen:
                raise DataFormatError(f"duplicate doc_id {doc_id!r}", path=path, line=lineno)
            seen.add(doc_id)
            yield doc_id, text


def read_queries_tsv(path: str) -> dict[str, str]:
    """Queries use the same TSV layout as the collection."""
    return dict(read_collection_tsv(path))


def read_qrels(path: str) -> dict[str, dict[str, int]]:
    """Parse 'qid iter docid grade' judgments; grades must be non-negative ints."""
    qrels: dict[str, dict[str, int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise DataFormatError(
                    f"expected 4 whitespace-separated fields, got {len(parts)}",
                    path=path, line=lineno,
                )
            qid, _, doc_id, grade_str = parts
            try:
                grade = int(grade_str)
            except ValueError:
                raise DataFormatError(
                    f"grade {grade_str!r} is not an integer", path=path, line=lineno
                ) from None
            if grade < 0:
                raise DataFormatError(f"negative grade {grade}", path=path, line=lineno)
            per_query = qrels.setdefault(qid, {})
            if doc_id in per_query:
                raise DataFormatError(
                    f"duplicate judgment for ({qid}, {doc_id})", path=path, line=lineno
                )
            per_query[doc_id] = grade
    return qrels


def write_trec_run(runs: Mapping[str, RankedList], tag: str, path: str) -> None:
    """Write 'qid Q0 docid rank score tag' lines, queries in ascending id order.

    Scores render with six decimals; queries with empty ranked lists are
    skipped with a warning (the format cannot represent them).
    """
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for qid in sorted(runs):
                entries = runs[qid].entries
                if not entries:
                    logger.warning("query %s has no results; omitted from %s", qid, path)
                    continue
                for rank, (doc_id, score) in enumerate(entries, start=1):
                    fh.write(f"{qid} Q0 {doc_id} {rank} {score:.6f} {tag}\n")
    except OSError as exc:
        raise DataFormatError(f"cannot write run file: {exc}", path=path) from exc


def read_trec_run(path: str) -> dict[str, RankedList]:
    """Parse a run file back into per-query ranked lists.

    Entries are re-sorted by (score desc, doc_id asc); a warning is logged
    if the file's own ordering disagreed.
    """
    per_query: dict[str, list[tuple[str, float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise DataFormatError(
                    f"expected 6 whitespace-separated fields, got {len(parts)}",
                    path=path, line=lineno,
                )
            qid, _q0, doc_id, _rank, score_str, _tag = parts
            try:
                score = float(score_str)
            except ValueError:
                raise DataFormatError(
                    f"score {score_str!r} is not a number", path=path, line=lineno
                ) from None
            per_query.setdefault(qid, []).append((doc_id, score))

    runs: dict[str, RankedList] = {}
    for qid, pairs in per_query.items():
        ordered = sort_entries(pairs)
        if ordered != pairs:
            logger.warning("run file %s: entries for query %s were not in rank order", path, qid)
        try:
            runs[qid] = RankedList.from_pairs(qid, ordered)
        except ValueError as exc:
            raise DataFormatError(str(exc), path=path) from exc
    return runs


@dataclass
class ToolkitConfig:
    """Everything a batch invocation can configure, bound from one YAML file."""

    bm25: BM25Params = field(default_factory=BM25Params)
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    rerank: RerankConfig = field(default_factory=RerankConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    scorer: str = "synthetic"


def load_config(path: str) -> ToolkitConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise DataFormatError(f"cannot read config: {exc}", path=path) from exc
    if not isinstance(raw, dict):
        raise DataFormatError("config must be a YAML mapping", path=path)

    try:
        bm25 = BM25Params(**raw.get("bm25", {}))
        norm_raw = dict(raw.get("normalization", {}))
        if "global_stats" in norm_raw:
            norm_raw["global_stats"] = tuple(float(x) for x in norm_raw["global_stats"])
        normalization = NormalizationConfig(**norm_raw)
        rerank_raw = dict(raw.get("rerank", {}))
        rerank = RerankConfig(normalization=normalization, **rerank_raw)
        fusion = FusionConfig(**raw.get("fusion", {}))
        scorer = str(raw.get("scorer", "synthetic"))
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"bad config value: {exc}", path=path) from exc
    return ToolkitConfig(bm25=bm25, normalization=normalization,
                         rerank=rerank, fusion=fusion, scorer=scorer)
