"""Scoring kernels for first-stage retrieval.

The per-query hot loop accumulates term-at-a-time BM25 contributions over
CSR postings. Two interchangeable implementations exist:

* a numba ``@njit`` kernel (default when numba imports), and
* a pure-numpy fallback.

Selection is driven by the ``INJECTRANK_NUMBA`` environment variable at
import time: ``0/false/off/no`` forces the numpy path, anything else (or
unset) prefers numba when available. Both paths add contributions in the
same term order, so per-document float accumulation is bit-identical;
``benchmarks/bench_scoring.py`` compares their throughput.
"""

from __future__ import annotations

import os

import numpy as np


def _env_wants_numba() -> bool:
    value = os.environ.get("INJECTRANK_NUMBA", "").strip().lower()
    return value not in ("0", "false", "off", "no")


def accumulate_bm25_numpy(starts, ends, post_docs, post_tfs, weights,
                          doc_lengths, avgdl, k1, b, scores, touched):
    """Numpy fallback: vectorized per query term.

    Within one term each document index appears at most once, so fancy
    in-place addition is safe; looping terms keeps the accumulation order
    identical to the scalar kernel.
    """
    for i in range(weights.shape[0]):
        lo, hi = starts[i], ends[i]
        if hi <= lo:
            continue
        d = post_docs[lo:hi]
        tf = post_tfs[lo:hi]
        denom = tf + k1 * ((1.0 - b) + b * (doc_lengths[d] / avgdl))
        scores[d] += weights[i] * (tf / denom)
        touched[d] = True


def _accumulate_bm25_scalar(starts, ends, post_docs, post_tfs, weights,
                            doc_lengths, avgdl, k1, b, scores, touched):
    for i in range(weights.shape[0]):
        w = weights[i]
        for j in range(starts[i], ends[i]):
            d = post_docs[j]
            tf = post_tfs[j]
            denom = tf + k1 * ((1.0 - b) + b * (doc_lengths[d] / avgdl))
            scores[d] += w * (tf / denom)
            touched[d] = True


_NUMBA_KERNEL = None
if _env_wants_numba():
    try:
        from numba import njit

        _NUMBA_KERNEL = njit(cache=True)(_accumulate_bm25_scalar)
    except ImportError:  # pragma: no cover - numba is an install-time choice
        _NUMBA_KERNEL = None

accumulate_bm25 = _NUMBA_KERNEL if _NUMBA_KERNEL is not None else accumulate_bm25_numpy


def kernel_backend() -> str:
    """Name of the kernel selected at import time ('numba' or 'numpy')."""
    return "numba" if accumulate_bm25 is _NUMBA_KERNEL and _NUMBA_KERNEL is not None else "numpy"


def available_kernels() -> dict:
    """Both kernels keyed by backend name (numba entry absent if unavailable)."""
    kernels = {"numpy": accumulate_bm25_numpy}
    if _NUMBA_KERNEL is not None:
        kernels["numba"] = _NUMBA_KERNEL
    return kernels


__all__ = [
    "accumulate_bm25",
    "accumulate_bm25_numpy",
    "available_kernels",
    "kernel_backend",
]
