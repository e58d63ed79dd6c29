"""Three-level memory data model: facts, scenes, persona, and the bank."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Literal

PERSONA_KEYS: tuple[str, ...] = (
    "basic_info",
    "interests",
    "personality",
    "values",
    "relationships",
)

Level = Literal["fact", "scene", "persona"]
Origin = Literal["initial", "spread_from_fact", "spread_from_scene"]
LEVELS: tuple[str, ...] = ("persona", "scene", "fact")
ORIGINS: tuple[str, ...] = ("initial", "spread_from_fact", "spread_from_scene")

Vector = tuple[float, ...]


class IntegrityError(LookupError):
    """A retrieval unit or scene member points at something not in the bank."""


@dataclass
class FactUnit:
    id: int
    content: str
    timestamp: str
    embedding: Vector
    keywords: list[str] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)
    edges: set[int] = field(default_factory=set)
    # turn id of the interaction this fact was extracted from
    source_turn: int | None = None


@dataclass
class SceneUnit:
    id: int
    summary: str
    members: set[int]
    embedding: Vector
    keywords: list[str] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)
    delta: str | None = None


@dataclass
class PersonaDimension:
    text: str
    embedding: Vector


@dataclass
class PersonaProfile:
    dimensions: dict[str, PersonaDimension]

    def text(self, key: str) -> str:
        return self.dimensions[key].text

    def render(self) -> str:
        return "\n".join(f"{key}: {self.dimensions[key].text}" for key in PERSONA_KEYS if key in self.dimensions)


@dataclass
class MemoryBank:
    dimension: int
    facts: dict[int, FactUnit]
    scenes: dict[int, SceneUnit]
    persona: PersonaProfile
    provenance: dict[str, Any] = field(default_factory=dict)

    def parent_map(self) -> dict[int, int]:
        """fact id -> id of the scene containing it (first scene wins on overlap)."""
        parents: dict[int, int] = {}
        for sid in sorted(self.scenes):
            for fid in self.scenes[sid].members:
                parents.setdefault(fid, sid)
        return parents

    def parent_scene(self, fact_id: int) -> SceneUnit:
        for sid in sorted(self.scenes):
            if fact_id in self.scenes[sid].members:
                return self.scenes[sid]
        raise IntegrityError(f"fact {fact_id} has no parent scene")


@dataclass(frozen=True)
class RetrievalUnit:
    level: str
    ref_id: int | str
    score: float
    origin: str = "initial"

    @property
    def key(self) -> tuple[str, int | str]:
        return (self.level, self.ref_id)


@dataclass
class RetrievedSet:
    units: list[RetrievalUnit] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.units)

    def __iter__(self) -> Iterator[RetrievalUnit]:
        return iter(self.units)

    def __contains__(self, key: object) -> bool:
        return any(u.key == key for u in self.units)

    def keys(self) -> list[tuple[str, int | str]]:
        return [u.key for u in self.units]

    def fact_ids(self) -> list[int]:
        return [int(u.ref_id) for u in self.units if u.level == "fact"]


def scene_text(scene: SceneUnit) -> str:
    """Calibrated scene text: the summary, plus the compensatory condition if any."""
    if scene.delta is None:
        return scene.summary
    return f"{scene.summary} {scene.delta}"


def persona_unit_text(key: str, text: str) -> str:
    return f"{key}: {text}"


def _finite(vec: Vector) -> bool:
    return all(math.isfinite(x) for x in vec)


def validate_bank(bank: MemoryBank) -> list[str]:
    """Check every structural invariant; return one message per violation.

    Messages start with the rule name (``id``, ``self-edge``, ``symmetry``,
    ``dimension``, ``members``, ``partition``, ``persona``) so callers can
    filter on it.
    """
    problems: list[str] = []
    dim = bank.dimension
    if not isinstance(dim, int) or dim <= 0:
        problems.append(f"dimension: bank dimension {dim!r} is not a positive integer")

    def check_vec(vec: Vector, what: str) -> None:
        if len(vec) != dim:
            problems.append(f"dimension: {what} embedding has length {len(vec)}, expected {dim}")
        elif not _finite(vec):
            problems.append(f"dimension: {what} embedding has non-finite entries")

    for key, fact in sorted(bank.facts.items()):
        if key != fact.id:
            problems.append(f"id: fact stored under key {key} has id {fact.id}")
        if fact.id in fact.edges:
            problems.append(f"self-edge: fact {fact.id} links to itself")
        for other in sorted(fact.edges):
            if other == fact.id:
                continue
            if other not in bank.facts:
                problems.append(f"symmetry: fact {fact.id} has edge to missing fact {other}")
            elif fact.id not in bank.facts[other].edges:
                problems.append(
                    f"symmetry: fact {fact.id} has edge to {other} but fact {other} lacks edge to {fact.id}"
                )
        check_vec(fact.embedding, f"fact {fact.id}")

    owner: dict[int, list[int]] = {}
    for key, scene in sorted(bank.scenes.items()):
        if key != scene.id:
            problems.append(f"id: scene stored under key {key} has id {scene.id}")
        if not scene.members:
            problems.append(f"members: scene {scene.id} has no members")
        for fid in sorted(scene.members):
            if fid not in bank.facts:
                problems.append(f"members: scene {scene.id} lists missing fact {fid}")
            owner.setdefault(fid, []).append(scene.id)
        check_vec(scene.embedding, f"scene {scene.id}")
    for fid in sorted(bank.facts):
        scenes = owner.get(fid, [])
        if not scenes:
            problems.append(f"partition: fact {fid} belongs to no scene")
        elif len(scenes) > 1:
            listed = " and ".join(str(s) for s in scenes)
            problems.append(f"partition: fact {fid} belongs to scenes {listed}")

    keys = set(bank.persona.dimensions)
    for missing in [k for k in PERSONA_KEYS if k not in keys]:
        problems.append(f"persona: dimension {missing} missing")
    for extra in sorted(keys - set(PERSONA_KEYS)):
        problems.append(f"persona: unexpected dimension {extra}")
    for key in PERSONA_KEYS:
        if key in bank.persona.dimensions:
            entry = bank.persona.dimensions[key]
            if not entry.text.strip():
                problems.append(f"persona: dimension {key} has empty text")
            check_vec(entry.embedding, f"persona {key}")
    return problems
