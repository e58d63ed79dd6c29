"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--facts 400] [--dim 256] [--repeat 3]

Prints one row per kernel with the best-of-N wall time for each backend and
the speedup. Outputs of the two backends are checked for equality first.
"""

from __future__ import annotations

import argparse
import random
import sys
import time

import numpy as np

from bimem import kernels
from bimem.graph import FactGraph, visit_orders
from bimem.retrieval import LexicalIndex


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(n_facts: int, dim: int, seed: int):
    gen = np.random.default_rng(seed)
    # sparse non-negative vectors, roughly what the hash embedder produces
    vecs = gen.random((n_facts, dim)) * (gen.random((n_facts, dim)) < 0.03)
    vecs[vecs.sum(axis=1) == 0, 0] = 1.0
    rows, cols = kernels.python.threshold_pairs(vecs, 0.2)
    graph = FactGraph.from_edges(range(n_facts), zip(rows.tolist(), cols.tolist()))
    indptr, indices = graph.csr()
    orders = visit_orders(n_facts, 20, seed)

    rng = random.Random(seed)
    vocab = [f"w{i}" for i in range(2000)]
    docs = [[rng.choice(vocab) for _ in range(rng.randint(5, 40))] for _ in range(n_facts * 5)]
    index = LexicalIndex(docs)
    query = index.query_terms(rng.sample(vocab, 8))
    bm25_args = (index.indptr, index.term_ids, index.tfs, index.doc_len, index.avgdl, index.idf, query, 1.2, 0.75)

    return {
        "threshold_pairs": (lambda k: k.threshold_pairs(vecs, 0.2), f"{n_facts} x {dim} vectors"),
        "label_propagation": (lambda k: k.label_propagation(indptr, indices, orders), f"{n_facts} nodes, {len(rows)} edges"),
        "bm25_scores": (lambda k: k.bm25_scores(*bm25_args), f"{len(docs)} docs, 8 query terms"),
    }


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.allclose(a, b, rtol=1e-12, atol=1e-12) if a.dtype.kind == "f" else np.array_equal(a, b)
    return a == b


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--facts", type=int, default=400)
    ap.add_argument("--dim", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if kernels.compiled is None:
        print("compiled kernels are not built (or BIMEM_PURE_PYTHON is set); nothing to compare", file=sys.stderr)
        return 1

    print(f"{'kernel':18s} {'workload':30s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, (run, label) in workloads(args.facts, args.dim, args.seed).items():
        if not same(run(kernels.python), run(kernels.compiled)):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 2
        py = best_of(lambda: run(kernels.python), args.repeat)
        cy = best_of(lambda: run(kernels.compiled), args.repeat)
        print(f"{name:18s} {label:30s} {py * 1e3:10.2f} {cy * 1e3:10.2f} {py / cy:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
