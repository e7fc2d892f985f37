"""Validation metric for fine-tuning: nDCG@10 with exponential gains.

Local to the service so it stays decoupled from the retrieval toolkit;
qrels files are the shared interface.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence


def ndcg_at_10(ranked_doc_ids: Sequence[str], grades: Mapping[str, int]) -> float | None:
    """None when the query has no positively-graded documents."""
    ideal = sorted((g for g in grades.values() if g > 0), reverse=True)
    if not ideal:
        return None

    def gain(grade: int, rank: int) -> float:
        return (2.0 ** grade - 1.0) / math.log2(rank + 1)

    dcg = sum(gain(grades.get(d, 0), r)
              for r, d in enumerate(ranked_doc_ids[:10], start=1))
    idcg = sum(gain(g, r) for r, g in enumerate(ideal[:10], start=1))
    return dcg / idcg


def mean_ndcg_at_10(rankings: Mapping[str, Sequence[str]],
                    qrels: Mapping[str, Mapping[str, int]]) -> float:
    values = []
    for qid, ranked in rankings.items():
        value = ndcg_at_10(ranked, qrels.get(qid, {}))
        if value is not None:
            values.append(value)
    return sum(values) / len(values) if values else 0.0


def read_qrels(path: str) -> dict[str, dict[str, int]]:
    """Standard 'qid iter docid grade' judgments."""
    qrels: dict[str, dict[str, int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            qid, _, doc_id, grade = parts
            qrels.setdefault(qid, {})[doc_id] = int(grade)
    return qrels
