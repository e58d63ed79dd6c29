import os
import subprocess
import sys

import numpy as np
import pytest

from bimem import kernels
from bimem.graph import FactGraph, visit_orders


def _oracle_pairs(vectors, tau):
    norms = np.linalg.norm(vectors, axis=1)
    out = set()
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            if norms[i] and norms[j] and vectors[i] @ vectors[j] / (norms[i] * norms[j]) > tau + 1e-12:
                out.add((i, j))
    return out


def test_threshold_pairs_match_numpy_oracle(kernel_impl):
    gen = np.random.default_rng(0)
    for _ in range(20):
        vecs = gen.normal(size=(gen.integers(1, 25), 8))
        rows, cols = kernel_impl.threshold_pairs(vecs, 0.2)
        assert set(zip(rows.tolist(), cols.tolist())) == _oracle_pairs(vecs, 0.2)


def test_threshold_pairs_strict_at_tau(kernel_impl):
    vecs = np.array([[1.0, 0.0], [0.2, np.sqrt(1 - 0.04)], [0.0, 0.0]])
    rows, _ = kernel_impl.threshold_pairs(vecs, 0.2)
    assert len(rows) == 0
    rows, _ = kernel_impl.threshold_pairs(vecs, 0.19)
    assert rows.tolist() == [0]


def test_label_propagation_two_triangles(kernel_impl):
    g = FactGraph.from_edges(range(6), [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    indptr, indices = g.csr()
    labels, iters = kernel_impl.label_propagation(indptr, indices, visit_orders(6, 20, 0))
    assert len(set(labels[:3].tolist())) == 1 and len(set(labels[3:].tolist())) == 1
    assert labels[0] != labels[3]
    assert 1 <= iters <= 20


def test_isolated_nodes_keep_their_label(kernel_impl):
    indptr = np.zeros(4, dtype=np.int64)
    labels, iters = kernel_impl.label_propagation(indptr, np.zeros(0, dtype=np.int64), visit_orders(3, 5, 1))
    assert labels.tolist() == [0, 1, 2]
    assert iters == 1


@pytest.mark.skipif(kernels.compiled is None, reason="extension not built")
def test_compiled_and_python_agree():
    gen = np.random.default_rng(3)
    for _ in range(30):
        n = int(gen.integers(2, 40))
        vecs = gen.normal(size=(n, 6))
        a = kernels.compiled.threshold_pairs(vecs, 0.2)
        b = kernels.python.threshold_pairs(vecs, 0.2)
        assert a[0].tolist() == b[0].tolist() and a[1].tolist() == b[1].tolist()
        g = FactGraph.from_edges(range(n), zip(a[0].tolist(), a[1].tolist()))
        indptr, indices = g.csr()
        orders = visit_orders(n, 20, int(gen.integers(0, 100)))
        la, ia = kernels.compiled.label_propagation(indptr, indices, orders)
        lb, ib = kernels.python.label_propagation(indptr, indices, orders)
        assert la.tolist() == lb.tolist() and ia == ib

        docs = int(gen.integers(1, 10))
        lens = gen.integers(1, 5, size=docs)
        indptr = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
        terms = np.concatenate([gen.choice(7, size=k, replace=False) for k in lens]).astype(np.int64)
        tfs = gen.integers(1, 4, size=len(terms)).astype(np.float64)
        doc_len = np.array([tfs[indptr[i]:indptr[i + 1]].sum() for i in range(docs)], dtype=np.float64)
        idf = gen.random(7)
        q = np.array([0, 3, 5], dtype=np.int64)
        sa = kernels.compiled.bm25_scores(indptr, terms, tfs, doc_len, doc_len.mean(), idf, q, 1.2, 0.75)
        sb = kernels.python.bm25_scores(indptr, terms, tfs, doc_len, doc_len.mean(), idf, q, 1.2, 0.75)
        np.testing.assert_allclose(sa, sb, rtol=1e-12, atol=1e-12)


def test_pure_python_switch_selects_fallback():
    env = dict(os.environ, BIMEM_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from bimem import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@pytest.mark.skipif(kernels.compiled is None, reason="extension not built")
def test_benchmark_script_runs():
    script = os.path.join(os.path.dirname(__file__), os.pardir, "benchmarks", "bench_kernels.py")
    out = subprocess.run([sys.executable, script, "--facts", "40", "--dim", "32", "--repeat", "1"],
                         capture_output=True, text=True, check=True)
    assert "threshold_pairs" in out.stdout and "speedup" in out.stdout
