"""Associative retrieval over a memory bank.

Initial search ranks every fact, calibrated scene and persona dimension in
one pool by a hybrid of min-max normalised dense cosine and BM25 scores.
Spreading activation then expands the seeds one hop: a fact pulls in its
parent scene, a scene pulls in its ``m`` member facts most similar to it, and
persona units stay as they are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from ._text import tokenize
from .embedding import EmbeddingProvider, as_matrix, provider_from_description, similarity_or_zero
from .errors import ConfigError
from .model import (
    PERSONA_KEYS,
    IntegrityError,
    MemoryBank,
    RetrievalUnit,
    RetrievedSet,
    persona_unit_text,
    scene_text,
)

# initial search size per question type
PRESET_K = {"single_hop": 35, "multi_hop": 25, "temporal": 30, "open_domain": 25}
DEFAULT_K = 30
STRATEGIES = ("bimem", "hierarchical", "topdown", "bottomup", "scene2fact", "fact2scene")

# scores closer than this are treated as ties
_SCORE_DECIMALS = 12


@dataclass(frozen=True)
class LevelQuotas:
    """Units taken per level by the top-down / bottom-up ablation strategies."""

    fact: int = 1
    scene: int = 15
    persona: int = 25


@dataclass(frozen=True)
class RetrievalConfig:
    k: int = DEFAULT_K
    m: int = 3
    alpha: float = 0.5
    bm25_k1: float = 1.2
    bm25_b: float = 0.75
    strategy: str = "bimem"
    quotas: LevelQuotas = field(default_factory=LevelQuotas)

    def __post_init__(self) -> None:
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError(f"k must be an integer >= 1, got {self.k!r}")
        if not isinstance(self.m, int) or self.m < 0:
            raise ConfigError(f"m must be an integer >= 0, got {self.m!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.bm25_k1 < 0 or not 0.0 <= self.bm25_b <= 1.0:
            raise ConfigError("bm25_k1 must be >= 0 and bm25_b in [0, 1]")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; expected one of {', '.join(STRATEGIES)}")

    @classmethod
    def preset(cls, category: str, **overrides) -> "RetrievalConfig":
        if category not in PRESET_K:
            raise ConfigError(f"no preset for category {category!r}")
        overrides.setdefault("k", PRESET_K[category])
        return cls(**overrides)

    def size_bound(self) -> int:
        return self.k * (1 + max(1, self.m))


def unit_keys(bank: MemoryBank) -> list[tuple[str, int | str]]:
    """Candidate pool in tie-break order: persona, then scenes, then facts, by id."""
    keys: list[tuple[str, int | str]] = [("persona", key) for key in PERSONA_KEYS if key in bank.persona.dimensions]
    keys += [("scene", sid) for sid in sorted(bank.scenes)]
    keys += [("fact", fid) for fid in sorted(bank.facts)]
    return keys


def unit_text(bank: MemoryBank, level: str, ref_id: int | str) -> str:
    if level == "persona":
        return persona_unit_text(str(ref_id), bank.persona.dimensions[str(ref_id)].text)
    if level == "scene":
        return scene_text(bank.scenes[int(ref_id)])
    return bank.facts[int(ref_id)].content


def unit_embedding(bank: MemoryBank, level: str, ref_id: int | str):
    try:
        if level == "persona":
            return bank.persona.dimensions[str(ref_id)].embedding
        if level == "scene":
            return bank.scenes[int(ref_id)].embedding
        if level == "fact":
            return bank.facts[int(ref_id)].embedding
    except (KeyError, ValueError):
        pass
    raise IntegrityError(f"{level} {ref_id!r} is not in the bank")


class LexicalIndex:
    """BM25 statistics over the text of every unit in the pool.

    Token streams come from :func:`bimem._text.tokenize`; persona units are
    indexed as ``"<dimension>: <text>"``.
    """

    def __init__(self, docs: Sequence[Sequence[str]], k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self.vocab: dict[str, int] = {}
        indptr = [0]
        term_ids: list[int] = []
        tfs: list[float] = []
        lengths: list[float] = []
        df: dict[int, int] = {}
        for tokens in docs:
            counts: dict[int, int] = {}
            for tok in tokens:
                tid = self.vocab.setdefault(tok, len(self.vocab))
                counts[tid] = counts.get(tid, 0) + 1
            for tid in sorted(counts):
                term_ids.append(tid)
                tfs.append(float(counts[tid]))
                df[tid] = df.get(tid, 0) + 1
            indptr.append(len(term_ids))
            lengths.append(float(len(tokens)))
        n = len(lengths)
        self.n_docs = n
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.term_ids = np.asarray(term_ids, dtype=np.int64)
        self.tfs = np.asarray(tfs, dtype=np.float64)
        self.doc_len = np.asarray(lengths, dtype=np.float64)
        self.avgdl = float(self.doc_len.mean()) if n else 0.0
        self.df = np.asarray([df.get(t, 0) for t in range(len(self.vocab))], dtype=np.float64)
        self.idf = np.log(1.0 + (n - self.df + 0.5) / (self.df + 0.5))

    @classmethod
    def from_bank(cls, bank: MemoryBank, k1: float = 1.2, b: float = 0.75) -> "LexicalIndex":
        return cls([tokenize(unit_text(bank, lvl, rid)) for lvl, rid in unit_keys(bank)], k1, b)

    def query_terms(self, tokens: Iterable[str]) -> np.ndarray:
        ids = sorted({self.vocab[t] for t in tokens if t in self.vocab})
        return np.asarray(ids, dtype=np.int64)

    def scores(self, tokens: Iterable[str], k1: float | None = None, b: float | None = None) -> np.ndarray:
        return kernels.bm25_scores(
            self.indptr,
            self.term_ids,
            self.tfs,
            self.doc_len,
            self.avgdl,
            self.idf,
            self.query_terms(tokens),
            self.k1 if k1 is None else k1,
            self.b if b is None else b,
        )


def bm25_score(index: LexicalIndex, query_tokens: Iterable[str], unit: int) -> float:
    """BM25 score of one indexed unit (by pool position) for the query."""
    return float(index.scores(list(query_tokens))[unit])


def minmax(values: np.ndarray) -> np.ndarray:
    if len(values) == 0:
        return values.astype(np.float64)
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return np.zeros_like(values, dtype=np.float64)
    return (values - lo) / (hi - lo)


class Retriever:
    """Read-only retrieval state for one bank: pool, dense matrix, lexical index."""

    def __init__(self, bank: MemoryBank, provider: EmbeddingProvider | None = None, cfg: RetrievalConfig | None = None):
        self.bank = bank
        cfg = cfg or RetrievalConfig()
        if provider is None:
            provider = provider_from_description(bank.provenance.get("embedder", {"kind": "hash", "dimension": bank.dimension}))
        self.provider = provider
        self.keys = unit_keys(bank)
        self.position = {key: i for i, key in enumerate(self.keys)}
        self.index = LexicalIndex.from_bank(bank, cfg.bm25_k1, cfg.bm25_b)
        mat = as_matrix([unit_embedding(bank, lvl, rid) for lvl, rid in self.keys], bank.dimension)
        norms = np.linalg.norm(mat, axis=1) if len(mat) else np.zeros(0)
        self._unit_vectors = np.divide(mat, norms[:, None], out=np.zeros_like(mat), where=norms[:, None] > 0)

    # -- scoring ----------------------------------------------------------

    def dense_scores(self, query: str) -> np.ndarray:
        if not self.keys:
            return np.zeros(0)
        q = np.asarray(self.provider.embed(query), dtype=np.float64)
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            return np.zeros(len(self.keys))
        return np.round(np.clip(self._unit_vectors @ (q / qn), -1.0, 1.0), _SCORE_DECIMALS)

    def bm25_scores(self, query: str, cfg: RetrievalConfig | None = None) -> np.ndarray:
        cfg = cfg or RetrievalConfig()
        if not self.keys:
            return np.zeros(0)
        raw = self.index.scores(tokenize(query), cfg.bm25_k1, cfg.bm25_b)
        return np.round(raw, _SCORE_DECIMALS)

    def hybrid_scores(self, query: str, cfg: RetrievalConfig) -> np.ndarray:
        dense = minmax(self.dense_scores(query))
        lexical = minmax(self.bm25_scores(query, cfg))
        return cfg.alpha * dense + (1.0 - cfg.alpha) * lexical

    def rank(self, scores: np.ndarray, level: str | None = None) -> list[int]:
        """Pool positions by score descending, ties by pool order."""
        positions = range(len(self.keys)) if level is None else [i for i, key in enumerate(self.keys) if key[0] == level]
        return sorted(positions, key=lambda i: (-scores[i], i))

    # -- retrieval --------------------------------------------------------

    def initial_search(self, query: str, cfg: RetrievalConfig) -> list[RetrievalUnit]:
        if not self.keys:
            return []
        scores = self.hybrid_scores(query, cfg)
        return [self._unit(i, scores[i], "initial") for i in self.rank(scores)[: cfg.k]]

    def _unit(self, pos: int, score: float, origin: str) -> RetrievalUnit:
        level, ref_id = self.keys[pos]
        return RetrievalUnit(level, ref_id, float(score), origin)

    def retrieve(self, query: str, cfg: RetrievalConfig | None = None) -> RetrievedSet:
        cfg = cfg or RetrievalConfig()
        if cfg.strategy == "topdown":
            return self._top_down(query, cfg)
        if cfg.strategy == "bottomup":
            return self._bottom_up(query, cfg)
        initial = self.initial_search(query, cfg)
        return spread_activation(
            initial,
            self.bank,
            cfg,
            fact_to_scene=cfg.strategy in ("bimem", "fact2scene"),
            scene_to_fact=cfg.strategy in ("bimem", "scene2fact"),
        )

    def _top_down(self, query: str, cfg: RetrievalConfig) -> RetrievedSet:
        scores = self.hybrid_scores(query, cfg)
        q = cfg.quotas
        seeds = [self._unit(i, scores[i], "initial") for i in self.rank(scores, "persona")[: q.persona]]
        scenes = [self._unit(i, scores[i], "initial") for i in self.rank(scores, "scene")[: q.scene]]
        out = RetrievedSet(seeds + scenes)
        seen = set(out.keys())
        for unit in scenes:
            for fid, a1 in top_member_facts(self.bank, int(unit.ref_id), q.fact):
                if ("fact", fid) not in seen:
                    seen.add(("fact", fid))
                    out.units.append(RetrievalUnit("fact", fid, a1, "spread_from_scene"))
        return out

    def _bottom_up(self, query: str, cfg: RetrievalConfig) -> RetrievedSet:
        scores = self.hybrid_scores(query, cfg)
        q = cfg.quotas
        facts = [self._unit(i, scores[i], "initial") for i in self.rank(scores, "fact")[: cfg.k]]
        out = RetrievedSet(list(facts))
        seen = set(out.keys())
        parents = self.bank.parent_map()
        added = 0
        for unit in facts:
            sid = parents.get(int(unit.ref_id))
            if sid is None:
                raise IntegrityError(f"fact {unit.ref_id} has no parent scene")
            if ("scene", sid) in seen or added >= q.scene:
                continue
            seen.add(("scene", sid))
            added += 1
            a = similarity_or_zero(self.bank.scenes[sid].embedding, self.bank.facts[int(unit.ref_id)].embedding)
            out.units.append(RetrievalUnit("scene", sid, a, "spread_from_fact"))
        for i in self.rank(scores, "persona")[: q.persona]:
            out.units.append(self._unit(i, scores[i], "initial"))
        return out


def top_member_facts(bank: MemoryBank, scene_id: int, m: int) -> list[tuple[int, float]]:
    """The ``m`` member facts most similar to the scene (dense cosine only)."""
    if m <= 0:
        return []
    scene = bank.scenes[scene_id]
    scored = []
    for fid in scene.members:
        if fid not in bank.facts:
            raise IntegrityError(f"scene {scene_id} lists missing fact {fid}")
        a1 = round(similarity_or_zero(scene.embedding, bank.facts[fid].embedding), _SCORE_DECIMALS)
        scored.append((fid, a1))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:m]


def spread_activation(
    initial: Sequence[RetrievalUnit],
    bank: MemoryBank,
    cfg: RetrievalConfig | None = None,
    fact_to_scene: bool = True,
    scene_to_fact: bool = True,
) -> RetrievedSet:
    """Expand the initial seeds by one associative hop.

    Output order: the seeds in rank order, then spread units grouped by the
    rank of the seed that produced them and, within a seed, by score.
    Duplicates keep their first-seen origin.
    """
    cfg = cfg or RetrievalConfig()
    for unit in initial:
        unit_embedding(bank, unit.level, unit.ref_id)
    out = RetrievedSet(list(initial))
    seen = set(out.keys())
    parents = bank.parent_map()
    for unit in initial:
        if unit.level == "fact" and fact_to_scene:
            sid = parents.get(int(unit.ref_id))
            if sid is None:
                raise IntegrityError(f"fact {unit.ref_id} has no parent scene")
            if ("scene", sid) not in seen:
                seen.add(("scene", sid))
                a = similarity_or_zero(bank.scenes[sid].embedding, bank.facts[int(unit.ref_id)].embedding)
                out.units.append(RetrievalUnit("scene", sid, a, "spread_from_fact"))
        elif unit.level == "scene" and scene_to_fact:
            for fid, a1 in top_member_facts(bank, int(unit.ref_id), cfg.m):
                if ("fact", fid) not in seen:
                    seen.add(("fact", fid))
                    out.units.append(RetrievalUnit("fact", fid, a1, "spread_from_scene"))
    return out


def initial_search(query: str, bank: MemoryBank, cfg: RetrievalConfig | None = None, provider: EmbeddingProvider | None = None) -> list[RetrievalUnit]:
    cfg = cfg or RetrievalConfig()
    return Retriever(bank, provider, cfg).initial_search(query, cfg)


def hybrid_score(query: str, level: str, ref_id: int | str, retriever: Retriever, cfg: RetrievalConfig | None = None) -> float:
    cfg = cfg or RetrievalConfig()
    pos = retriever.position.get((level, ref_id))
    if pos is None:
        raise IntegrityError(f"{level} {ref_id!r} is not in the bank")
    return float(retriever.hybrid_scores(query, cfg)[pos])


def retrieve(query: str, bank: MemoryBank, cfg: RetrievalConfig | None = None, provider: EmbeddingProvider | None = None) -> RetrievedSet:
    cfg = cfg or RetrievalConfig()
    return Retriever(bank, provider, cfg).retrieve(query, cfg)


def check_provenance(result: RetrievedSet, bank: MemoryBank) -> list[str]:
    """Verify every spread unit is linked to a seed; returns problems found."""
    problems = []
    parents = bank.parent_map()
    seed_facts = {int(u.ref_id) for u in result if u.origin == "initial" and u.level == "fact"}
    seed_scenes = {int(u.ref_id) for u in result if u.origin == "initial" and u.level == "scene"}
    for u in result:
        if not math.isfinite(u.score):
            problems.append(f"{u.level} {u.ref_id}: non-finite score")
        if u.origin == "spread_from_fact":
            if u.level != "scene" or not any(parents.get(f) == u.ref_id for f in seed_facts):
                problems.append(f"{u.level} {u.ref_id}: not the parent of any seed fact")
        elif u.origin == "spread_from_scene":
            if u.level != "fact" or not any(int(u.ref_id) in bank.scenes[s].members for s in seed_scenes):
                problems.append(f"{u.level} {u.ref_id}: not a member of any seed scene")
    return problems
