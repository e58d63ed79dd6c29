"""Similarity fact graph and label-propagation clustering."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .embedding import DimensionMismatchError, as_matrix
from .errors import ConfigError
from .model import FactUnit

DEFAULT_TAU = 0.2
DEFAULT_LPA_ITERS = 20


@dataclass
class FactGraph:
    node_ids: list[int]
    adjacency: dict[int, set[int]]
    tau: float = DEFAULT_TAU

    def edges(self) -> set[tuple[int, int]]:
        return {(a, b) for a, nbrs in self.adjacency.items() for b in nbrs if a < b}

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR arrays over node positions (sorted node ids -> 0..n-1)."""
        pos = {nid: i for i, nid in enumerate(self.node_ids)}
        indptr = [0]
        indices: list[int] = []
        for nid in self.node_ids:
            indices.extend(sorted(pos[u] for u in self.adjacency.get(nid, ())))
            indptr.append(len(indices))
        return np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64)

    @classmethod
    def from_edges(cls, node_ids: Sequence[int], edges, tau: float = DEFAULT_TAU) -> "FactGraph":
        adjacency: dict[int, set[int]] = {nid: set() for nid in node_ids}
        for a, b in edges:
            if a == b:
                continue
            adjacency[a].add(b)
            adjacency[b].add(a)
        return cls(sorted(node_ids), adjacency, tau)


@dataclass
class Clustering:
    assignment: dict[int, int]
    clusters: list[set[int]] = field(default_factory=list)
    iterations: int = 0


def build_edges(facts: Sequence[FactUnit], tau: float = DEFAULT_TAU) -> FactGraph:
    """Connect every pair of facts whose embedding cosine exceeds ``tau``.

    Edge sets are written back onto the facts symmetrically.
    """
    if not 0.0 <= tau < 1.0:
        raise ConfigError(f"tau must lie in [0, 1), got {tau}")
    ordered = sorted(facts, key=lambda f: f.id)
    ids = [f.id for f in ordered]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate fact ids")
    dims = {len(f.embedding) for f in ordered}
    if len(dims) > 1:
        raise DimensionMismatchError(f"fact embeddings have mixed dimensions {sorted(dims)}")
    dim = dims.pop() if dims else 0
    rows, cols = kernels.threshold_pairs(as_matrix([f.embedding for f in ordered], dim), float(tau))
    graph = FactGraph.from_edges(ids, ((ids[i], ids[j]) for i, j in zip(rows.tolist(), cols.tolist())), tau)
    for fact in ordered:
        fact.edges = set(graph.adjacency[fact.id])
    return graph


def visit_orders(n: int, max_iters: int, seed: int) -> np.ndarray:
    """Per-iteration node visit orders: one seeded shuffle of 0..n-1 per row."""
    rng = random.Random(seed)
    rows = []
    for _ in range(max_iters):
        order = list(range(n))
        rng.shuffle(order)
        rows.append(order)
    return np.asarray(rows, dtype=np.int64).reshape(max_iters, n)


def lpa_cluster(graph: FactGraph, max_iters: int = DEFAULT_LPA_ITERS, seed: int = 0) -> Clustering:
    """Asynchronous label propagation with smallest-label tie-breaking.

    Each node starts with its own id as label. Clusters are relabelled
    densely 0..J-1 in order of their smallest member id.
    """
    if max_iters < 1:
        raise ConfigError(f"max_iters must be >= 1, got {max_iters}")
    n = len(graph.node_ids)
    if n == 0:
        return Clustering({}, [], 0)
    indptr, indices = graph.csr()
    labels, iterations = kernels.label_propagation(indptr, indices, visit_orders(n, max_iters, seed))
    groups: dict[int, set[int]] = {}
    for pos, lab in enumerate(labels.tolist()):
        groups.setdefault(lab, set()).add(graph.node_ids[pos])
    clusters = sorted(groups.values(), key=min)
    assignment = {nid: j for j, members in enumerate(clusters) for nid in members}
    return Clustering(assignment, clusters, int(iterations))


def connected_components(graph: FactGraph) -> list[set[int]]:
    """Breadth-first components, ordered by smallest member id."""
    seen: set[int] = set()
    comps: list[set[int]] = []
    for start in graph.node_ids:
        if start in seen:
            continue
        comp = {start}
        frontier = [start]
        seen.add(start)
        while frontier:
            v = frontier.pop()
            for u in graph.adjacency.get(v, ()):
                if u not in seen:
                    seen.add(u)
                    comp.add(u)
                    frontier.append(u)
        comps.append(comp)
    return sorted(comps, key=min)
