"""Bidirectional memory construction.

The inductive pass builds the hierarchy bottom-up (facts, similarity graph,
LPA clusters, scenes, persona). The reflective pass then checks each scene
against the persona and appends a compensatory condition where the two
disagree. Facts are never modified by the reflective pass.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from . import operators
from .embedding import EmbeddingProvider, HashEmbedder, RemoteEmbedder
from .errors import BimemError, ConfigError, StageError
from .graph import DEFAULT_LPA_ITERS, DEFAULT_TAU, build_edges, lpa_cluster
from .model import (
    PERSONA_KEYS,
    FactUnit,
    MemoryBank,
    PersonaDimension,
    PersonaProfile,
    SceneUnit,
    persona_unit_text,
    scene_text,
)
from .operators import ChatBackend

log = logging.getLogger(__name__)


@dataclass
class Turn:
    turn: int
    speaker: str
    query: str
    response: str
    timestamp: str


@dataclass
class Conversation:
    id: str
    turns: list[Turn]

    def validate(self) -> None:
        if not self.turns:
            raise ConfigError(f"conversation {self.id!r} has no turns")
        for prev, cur in zip(self.turns, self.turns[1:]):
            if cur.turn <= prev.turn:
                raise ConfigError(f"conversation {self.id!r}: turn ids must increase ({prev.turn} then {cur.turn})")


@dataclass
class ConstructionConfig:
    tau: float = DEFAULT_TAU
    lpa_max_iters: int = DEFAULT_LPA_ITERS
    seed: int = 0
    embedder: str = "hash"
    embed_dim: int = 256
    stopwords: bool = True
    backend: str = "mock"
    max_workers: int = 4
    # rendered scene text handed to each persona call; oldest scenes dropped beyond this
    persona_budget_chars: int = 60_000

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau < 1.0:
            raise ConfigError(f"tau must lie in [0, 1), got {self.tau}")
        if self.lpa_max_iters < 1:
            raise ConfigError("lpa_max_iters must be >= 1")
        if self.max_workers < 1:
            raise ConfigError("max_workers must be >= 1")

    def make_provider(self) -> EmbeddingProvider:
        if self.embedder == "hash":
            return HashEmbedder(self.embed_dim, self.seed, self.stopwords)
        if self.embedder == "remote":
            return RemoteEmbedder.from_env()
        raise ConfigError(f"unknown embedder {self.embedder!r}")

    def make_backend(self) -> ChatBackend:
        return operators.make_backend(self.backend)


@dataclass
class InductiveResult:
    facts: list[FactUnit]
    scenes: list[SceneUnit]
    persona: PersonaProfile
    warnings: list[str] = field(default_factory=list)


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (BimemError, ValueError) as exc:
        raise StageError(name, exc) from exc


def _mean_embedding(facts: Sequence[FactUnit]) -> tuple[float, ...]:
    return tuple(float(x) for x in np.mean(np.asarray([f.embedding for f in facts], dtype=np.float64), axis=0))


def embed_scene(scene: SceneUnit, members: Sequence[FactUnit], provider: EmbeddingProvider) -> tuple[float, ...]:
    text = scene_text(scene)
    if text.strip():
        return provider.embed(text)
    return _mean_embedding(members)


def extract_facts(
    conv: Conversation, backend: ChatBackend, provider: EmbeddingProvider, max_workers: int = 4
) -> list[FactUnit]:
    def one(turn: Turn) -> operators.FactDraft:
        return operators.extract_fact(backend, (turn.query, turn.response), turn.speaker, turn.timestamp)

    if max_workers == 1 or len(conv.turns) == 1:
        drafts = [one(t) for t in conv.turns]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            drafts = list(pool.map(one, conv.turns))
    vectors = _stage("embed", provider.embed_many, [d.context for d in drafts])
    return [
        FactUnit(
            id=i,
            content=d.context,
            timestamp=t.timestamp,
            embedding=tuple(v),
            keywords=list(d.keywords),
            tags=list(d.tags),
            source_turn=t.turn,
        )
        for i, (t, d, v) in enumerate(zip(conv.turns, drafts, vectors))
    ]


def _persona_scenes(scenes: list[SceneUnit], budget: int, warnings: list[str]) -> list[SceneUnit]:
    kept = list(scenes)
    total = len(operators.render_scenes(kept))
    while len(kept) > 1 and total > budget:
        dropped = kept.pop(0)
        total = len(operators.render_scenes(kept))
        warnings.append(f"persona: scene {dropped.id} dropped to fit the {budget}-character budget")
    if total > budget:
        warnings.append(f"persona: single remaining scene exceeds the {budget}-character budget")
    return kept


def distill_persona(
    scenes: list[SceneUnit],
    backend: ChatBackend,
    provider: EmbeddingProvider,
    budget: int = 60_000,
    warnings: list[str] | None = None,
) -> PersonaProfile:
    warnings = warnings if warnings is not None else []
    context = _persona_scenes(scenes, budget, warnings)
    dims: dict[str, PersonaDimension] = {}
    for key in PERSONA_KEYS:
        text = operators.distill_persona_dimension(backend, context, key)
        dims[key] = PersonaDimension(text=text, embedding=provider.embed(persona_unit_text(key, text)))
    return PersonaProfile(dims)


def inductive_pass(
    conv: Conversation,
    cfg: ConstructionConfig,
    backend: ChatBackend | None = None,
    provider: EmbeddingProvider | None = None,
) -> InductiveResult:
    conv.validate()
    backend = backend or cfg.make_backend()
    provider = provider or cfg.make_provider()
    warnings: list[str] = []

    facts = _stage("extract", extract_facts, conv, backend, provider, cfg.max_workers)
    graph = _stage("graph", build_edges, facts, cfg.tau)
    clustering = _stage("cluster", lpa_cluster, graph, cfg.lpa_max_iters, cfg.seed)
    log.info("%d facts, %d edges, %d clusters", len(facts), len(graph.edges()), len(clustering.clusters))

    by_id = {f.id: f for f in facts}
    scenes: list[SceneUnit] = []
    for j, members in enumerate(clustering.clusters):
        member_facts = [by_id[i] for i in sorted(members)]
        draft = _stage("aggregate", operators.aggregate_scene, backend, member_facts)
        scene = SceneUnit(
            id=j,
            summary=draft.scene_memory,
            members=set(members),
            embedding=(),
            keywords=list(draft.keywords),
            tags=list(draft.tags),
        )
        scene.embedding = _stage("aggregate", embed_scene, scene, member_facts, provider)
        scenes.append(scene)

    persona = _stage("distill", distill_persona, scenes, backend, provider, cfg.persona_budget_chars, warnings)
    return InductiveResult(facts, scenes, persona, warnings)


def reflective_pass(
    scenes: Sequence[SceneUnit],
    persona: PersonaProfile,
    backend: ChatBackend,
    provider: EmbeddingProvider,
    facts: dict[int, FactUnit] | None = None,
    warnings: list[str] | None = None,
) -> list[SceneUnit]:
    """Calibrate each scene against the persona; returns new scene objects.

    A scene whose calibration call fails is kept as-is and noted in
    ``warnings``.
    """
    warnings = warnings if warnings is not None else []
    calibrated: list[SceneUnit] = []
    for scene in sorted(scenes, key=lambda s: s.id):
        try:
            verdict = operators.calibrate_scene(backend, scene, persona)
        except (BimemError, ValueError) as exc:
            warnings.append(f"calibrate: scene {scene.id} left uncalibrated: {exc}")
            calibrated.append(scene)
            continue
        if verdict.coerced:
            warnings.append(f"calibrate: scene {scene.id} verdict coerced to consistent ({verdict.reason or 'no reason'})")
        if not verdict.needs_calibration:
            calibrated.append(scene)
            continue
        updated = replace(scene, members=set(scene.members), delta=verdict.added_condition)
        members = [facts[i] for i in sorted(scene.members)] if facts else []
        updated.embedding = embed_scene(updated, members, provider)
        calibrated.append(updated)
    return calibrated


def construct_memory(
    conv: Conversation,
    cfg: ConstructionConfig | None = None,
    backend: ChatBackend | None = None,
    provider: EmbeddingProvider | None = None,
) -> MemoryBank:
    """Inductive pass then reflective pass; returns a validated bank."""
    from .model import validate_bank

    cfg = cfg or ConstructionConfig()
    backend = backend or cfg.make_backend()
    provider = provider or cfg.make_provider()
    induced = inductive_pass(conv, cfg, backend, provider)
    warnings = list(induced.warnings)
    facts = {f.id: f for f in induced.facts}
    scenes = reflective_pass(induced.scenes, induced.persona, backend, provider, facts, warnings)
    for w in warnings:
        log.warning(w)
    bank = MemoryBank(
        dimension=provider.dimension,
        facts=facts,
        scenes={s.id: s for s in scenes},
        persona=induced.persona,
        provenance=provenance(cfg, conv.id, provider, backend, warnings),
    )
    problems = validate_bank(bank)
    if problems:
        raise StageError("validate", BimemError("; ".join(problems)))
    return bank


def provenance(
    cfg: ConstructionConfig,
    conversation_id: str,
    provider: EmbeddingProvider,
    backend: ChatBackend,
    warnings: list[str],
) -> dict[str, Any]:
    from .retrieval import RetrievalConfig

    rc = RetrievalConfig()
    return {
        "conversation_id": conversation_id,
        "tau": cfg.tau,
        "lpa_max_iters": cfg.lpa_max_iters,
        "seed": cfg.seed,
        "embedder": provider.describe(),
        "backend": backend.describe(),
        "retrieval_defaults": {"k": rc.k, "m": rc.m, "alpha": rc.alpha},
        "warnings": list(warnings),
    }


__all__ = [
    "ConstructionConfig",
    "Conversation",
    "InductiveResult",
    "Turn",
    "construct_memory",
    "distill_persona",
    "embed_scene",
    "extract_facts",
    "inductive_pass",
    "reflective_pass",
]
