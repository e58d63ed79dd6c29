"""Random-but-valid banks and conversations for property and acceptance tests."""

from __future__ import annotations

import random

from bimem.construction import Conversation, Turn
from bimem.embedding import HashEmbedder
from bimem.model import (
    PERSONA_KEYS,
    FactUnit,
    MemoryBank,
    PersonaDimension,
    PersonaProfile,
    SceneUnit,
    persona_unit_text,
    scene_text,
)

WORDS = (
    "river garden piano coffee lisbon hiking camera shelter biscuit nurse painting chess sailing "
    "oven bread sunrise mountain forest museum guitar violin tennis soccer dinner spicy mild "
    "sister brother mother friend office career teacher kitten puppy market winter summer autumn"
).split()


def random_text(rng: random.Random, lo: int = 2, hi: int = 8) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(lo, hi)))


def random_bank(rng: random.Random, n_facts: int | None = None, dim: int = 32, seed: int = 0) -> MemoryBank:
    emb = HashEmbedder(dim, seed)
    n = n_facts if n_facts is not None else rng.randint(1, 30)
    facts = {
        i: FactUnit(
            id=i,
            content=random_text(rng),
            timestamp=f"2023-05-{1 + i % 28:02d}T10:00:00",
            embedding=(),
            keywords=[rng.choice(WORDS)],
            tags=[],
            source_turn=i,
        )
        for i in range(n)
    }
    for f in facts.values():
        f.embedding = emb.embed(f.content)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.15:
                facts[i].edges.add(j)
                facts[j].edges.add(i)
    ids = list(range(n))
    rng.shuffle(ids)
    n_scenes = rng.randint(1, n)
    groups: list[set[int]] = [set() for _ in range(n_scenes)]
    for pos, fid in enumerate(ids):
        groups[pos % n_scenes].add(fid)
    scenes = {}
    for j, members in enumerate(groups):
        scene = SceneUnit(
            id=j,
            summary=random_text(rng, 3, 12),
            members=members,
            embedding=(),
            keywords=[],
            tags=[],
            delta=random_text(rng, 1, 4) if rng.random() < 0.3 else None,
        )
        scene.embedding = emb.embed(scene_text(scene))
        scenes[j] = scene
    dims = {}
    for key in PERSONA_KEYS:
        text = random_text(rng, 1, 5)
        dims[key] = PersonaDimension(text, emb.embed(persona_unit_text(key, text)))
    return MemoryBank(
        dimension=dim,
        facts=facts,
        scenes=scenes,
        persona=PersonaProfile(dims),
        provenance={"embedder": emb.describe(), "conversation_id": "rand", "tau": 0.2},
    )


def conversation(texts: list[str], cid: str = "c") -> Conversation:
    return Conversation(
        cid,
        [Turn(turn=i, speaker="Ana", query=t, response="ok", timestamp=f"2023-01-{i % 28 + 1:02d}T12:00:00") for i, t in enumerate(texts)],
    )


def hand_bank(
    fact_texts: list[str],
    groups: list[set[int]],
    summaries: list[str] | None = None,
    persona: dict[str, str] | None = None,
    dim: int = 256,
) -> MemoryBank:
    """Bank with explicit scene membership, embedded by the hash embedder."""
    emb = HashEmbedder(dim)
    facts = {
        i: FactUnit(i, text, f"2023-01-{i % 28 + 1:02d}", emb.embed(text), source_turn=i)
        for i, text in enumerate(fact_texts)
    }
    summaries = summaries or ["; ".join(fact_texts[i] for i in sorted(g)) for g in groups]
    scenes = {j: SceneUnit(j, summaries[j], set(g), emb.embed(summaries[j])) for j, g in enumerate(groups)}
    texts = {key: "unknown" for key in PERSONA_KEYS}
    texts.update(persona or {})
    dims = {k: PersonaDimension(t, emb.embed(persona_unit_text(k, t))) for k, t in texts.items()}
    return MemoryBank(dim, facts, scenes, PersonaProfile(dims), {"embedder": emb.describe()})
