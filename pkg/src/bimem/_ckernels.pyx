# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: pairwise edge thresholding, label propagation, BM25.

Signatures mirror :mod:`bimem._pykernels` exactly; :mod:`bimem.kernels`
picks one at import time.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

# similarities within this of tau count as equal to it (no edge)
cdef double EDGE_EPS = 1e-12


def threshold_pairs(double[:, ::1] vectors, double tau):
    cdef Py_ssize_t n = vectors.shape[0]
    cdef Py_ssize_t d = vectors.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double acc, sim
    cdef double[::1] norms = np.empty(n, dtype=np.float64)
    rows = []
    cols = []
    for i in range(n):
        acc = 0.0
        for t in range(d):
            acc += vectors[i, t] * vectors[i, t]
        norms[i] = sqrt(acc)
    for i in range(n):
        if norms[i] == 0.0:
            continue
        for j in range(i + 1, n):
            if norms[j] == 0.0:
                continue
            acc = 0.0
            for t in range(d):
                acc += vectors[i, t] * vectors[j, t]
            sim = acc / (norms[i] * norms[j])
            if sim > tau + EDGE_EPS:
                rows.append(i)
                cols.append(j)
    return np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)


def label_propagation(const cnp.int64_t[::1] indptr,
                      const cnp.int64_t[::1] indices,
                      const cnp.int64_t[:, ::1] orders):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t n_iters = orders.shape[0]
    cdef Py_ssize_t it, pos, v, e, lab, best, best_count, n_touched, k
    cdef bint changed
    labels_arr = np.arange(n, dtype=np.int64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef cnp.int64_t[::1] counts = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] touched = np.empty(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t iterations = 0
    for it in range(n_iters):
        iterations += 1
        changed = False
        for pos in range(n):
            v = orders[it, pos]
            if indptr[v] == indptr[v + 1]:
                continue
            n_touched = 0
            for e in range(indptr[v], indptr[v + 1]):
                lab = labels[indices[e]]
                if counts[lab] == 0:
                    touched[n_touched] = lab
                    n_touched += 1
                counts[lab] += 1
            best = -1
            best_count = 0
            for k in range(n_touched):
                lab = touched[k]
                if counts[lab] > best_count or (counts[lab] == best_count and lab < best):
                    best = lab
                    best_count = counts[lab]
                counts[lab] = 0
            if best != labels[v]:
                labels[v] = best
                changed = True
        if not changed:
            break
    return labels_arr, iterations


def bm25_scores(const cnp.int64_t[::1] indptr,
                const cnp.int64_t[::1] term_ids,
                const double[::1] tfs,
                const double[::1] doc_len,
                double avgdl,
                const double[::1] idf,
                const cnp.int64_t[::1] query_terms,
                double k1,
                double b):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t n_terms = idf.shape[0]
    cdef Py_ssize_t i, e, t
    cdef double tf, norm, acc
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef cnp.uint8_t[::1] wanted = np.zeros(max(n_terms, 1), dtype=np.uint8)
    for t in range(query_terms.shape[0]):
        if 0 <= query_terms[t] < n_terms:
            wanted[query_terms[t]] = 1
    for i in range(n):
        if avgdl > 0.0:
            norm = k1 * (1.0 - b + b * doc_len[i] / avgdl)
        else:
            norm = k1
        acc = 0.0
        for e in range(indptr[i], indptr[i + 1]):
            t = term_ids[e]
            if wanted[t]:
                tf = tfs[e]
                acc += idf[t] * tf * (k1 + 1.0) / (tf + norm)
        out[i] = acc
    return out_arr
