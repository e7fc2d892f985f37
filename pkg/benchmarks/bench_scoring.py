"""Benchmark the first-stage scoring kernels: numba @njit vs pure numpy.

Builds a synthetic corpus, runs a batch of queries through retrieval with
each kernel, verifies the results agree, and reports per-query latency.

    python benchmarks/bench_scoring.py [--docs 50000] [--queries 200]

The production code path picks its kernel at import time from the
INJECTRANK_NUMBA environment variable; this script times both in one
process via the kernel override hook.
"""

import argparse
import time

import numpy as np

from injectrank._kernels import available_kernels
from injectrank.lexical import BM25Params, build_index, retrieve_topk


def build_synthetic_index(n_docs: int, vocab_size: int = 20000,
                          mean_len: int = 60, seed: int = 42):
    rng = np.random.default_rng(seed)
    # Zipf-ish term distribution so postings lists have realistic skew.
    ranks = np.arange(1, vocab_size + 1)
    weights = 1.0 / ranks
    weights /= weights.sum()
    docs = []
    for i in range(n_docs):
        length = max(5, int(rng.normal(mean_len, 15)))
        terms = rng.choice(vocab_size, size=length, p=weights)
        docs.append((f"d{i:07d}", " ".join(f"t{t}" for t in terms)))
    return build_index(docs), rng


def make_queries(rng, n_queries: int, vocab_size: int = 20000):
    out = []
    for _ in range(n_queries):
        n_terms = int(rng.integers(2, 8))
        out.append(" ".join(f"t{int(rng.integers(0, 2000))}" for _ in range(n_terms)))
    return out


def time_kernel(index, queries, kernel, k: int, repeats: int = 3):
    params = BM25Params()
    best = float("inf")
    results = None
    for _ in range(repeats):
        start = time.perf_counter()
        results = [retrieve_topk(index, q, k=k, _kernel=kernel) for q in queries]
        best = min(best, time.perf_counter() - start)
    return best, results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=50000)
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--k", type=int, default=1000)
    args = parser.parse_args()

    kernels = available_kernels()
    if "numba" not in kernels:
        print("numba kernel unavailable (INJECTRANK_NUMBA=0 or numba missing); "
              "only timing numpy")

    print(f"building index: {args.docs} docs ...")
    t0 = time.perf_counter()
    index, rng = build_synthetic_index(args.docs)
    print(f"  built in {time.perf_counter() - t0:.1f}s "
          f"(vocab={index.vocab_size}, avgdl={index.avg_doc_length:.1f})")
    queries = make_queries(rng, args.queries)

    if "numba" in kernels:
        print("warming up numba (jit compile) ...")
        t0 = time.perf_counter()
        retrieve_topk(index, queries[0], k=10, _kernel=kernels["numba"])
        print(f"  compiled in {time.perf_counter() - t0:.2f}s")

    timings = {}
    outputs = {}
    for name, kernel in sorted(kernels.items()):
        elapsed, results = time_kernel(index, queries, kernel, k=args.k)
        timings[name] = elapsed
        outputs[name] = results
        per_query = 1000.0 * elapsed / len(queries)
        print(f"{name:>6}: {elapsed:.3f}s total, {per_query:.3f} ms/query")

    if len(outputs) == 2:
        agree = all(a.entries == b.entries
                    for a, b in zip(outputs["numba"], outputs["numpy"]))
        print(f"results identical: {agree}")
        speedup = timings["numpy"] / timings["numba"]
        print(f"numba speedup over numpy fallback: {speedup:.2f}x")


if __name__ == "__main__":
    main()
