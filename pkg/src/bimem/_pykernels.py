"""Pure-Python versions of the compiled kernels in ``_ckernels.pyx``."""

from __future__ import annotations

import math

import numpy as np

# similarities within this of tau count as equal to it (no edge)
EDGE_EPS = 1e-12


def threshold_pairs(vectors: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    rows: list[int] = []
    cols: list[int] = []
    data = vectors.tolist()
    norms = [math.sqrt(sum(x * x for x in row)) for row in data]
    n = len(data)
    for i in range(n):
        if norms[i] == 0.0:
            continue
        a = data[i]
        for j in range(i + 1, n):
            if norms[j] == 0.0:
                continue
            dot = 0.0
            for x, y in zip(a, data[j]):
                dot += x * y
            if dot / (norms[i] * norms[j]) > tau + EDGE_EPS:
                rows.append(i)
                cols.append(j)
    return np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)


def label_propagation(
    indptr: np.ndarray, indices: np.ndarray, orders: np.ndarray
) -> tuple[np.ndarray, int]:
    n = len(indptr) - 1
    labels = list(range(n))
    ptr = indptr.tolist()
    nbrs = indices.tolist()
    iterations = 0
    for order in orders.tolist():
        iterations += 1
        changed = False
        for v in order:
            lo, hi = ptr[v], ptr[v + 1]
            if lo == hi:
                continue
            counts: dict[int, int] = {}
            for u in nbrs[lo:hi]:
                lab = labels[u]
                counts[lab] = counts.get(lab, 0) + 1
            best = min(counts, key=lambda lab: (-counts[lab], lab))
            if best != labels[v]:
                labels[v] = best
                changed = True
        if not changed:
            break
    return np.asarray(labels, dtype=np.int64), iterations


def bm25_scores(
    indptr: np.ndarray,
    term_ids: np.ndarray,
    tfs: np.ndarray,
    doc_len: np.ndarray,
    avgdl: float,
    idf: np.ndarray,
    query_terms: np.ndarray,
    k1: float,
    b: float,
) -> np.ndarray:
    wanted = {int(t) for t in query_terms if 0 <= t < len(idf)}
    idf_l = idf.tolist()
    ptr = indptr.tolist()
    terms = term_ids.tolist()
    freqs = tfs.tolist()
    out = np.zeros(len(ptr) - 1, dtype=np.float64)
    for i, length in enumerate(doc_len.tolist()):
        norm = k1 * (1.0 - b + b * length / avgdl) if avgdl > 0.0 else k1
        acc = 0.0
        for e in range(ptr[i], ptr[i + 1]):
            t = terms[e]
            if t in wanted:
                tf = freqs[e]
                acc += idf_l[t] * tf * (k1 + 1.0) / (tf + norm)
        out[i] = acc
    return out
