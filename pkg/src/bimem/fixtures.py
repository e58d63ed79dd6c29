"""Synthetic conversations for offline demos and the strategy ablation check.

``planted_evidence_suite`` builds conversations made of several disjoint
topics. In the target topic three facts form one scene: a hub fact that
shares vocabulary with the other two, a side fact, and the gold fact. Each
conversation carries two questions whose answer is the gold fact:

* a *scene-routed* question phrased with the side fact's words, so the gold
  fact only surfaces by spreading from its scene;
* a *direct* question phrased with the gold fact's own words.

The hub is always the member closest to the scene, so a strategy that takes a
single representative fact per scene never returns the gold fact.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from datetime import datetime, timedelta
from importlib import resources

from .construction import Conversation, Turn
from .evaluation import QAItem, parse_dataset


@dataclass(frozen=True)
class Topic:
    name: str
    shared: tuple[str, str, str, str]
    hub: str
    side: tuple[str, str, str]
    gold: tuple[str, str, str]


TOPICS: tuple[Topic, ...] = (
    Topic("garden", ("garden", "seedlings", "greenhouse", "compost"), "allotment",
          ("tomatoes", "trellis", "watering"), ("blight", "fungicide", "leaves")),
    Topic("astronomy", ("telescope", "nebula", "eyepiece", "tripod"), "observatory",
          ("saturn", "rings", "moons"), ("meteor", "shower", "perseids")),
    Topic("cycling", ("bicycle", "saddle", "gears", "helmet"), "velodrome",
          ("puncture", "inner", "tube"), ("alpine", "climb", "switchbacks")),
    Topic("baking", ("sourdough", "starter", "flour", "oven"), "bakery",
          ("croissants", "butter", "lamination"), ("rye", "caraway", "loaf")),
    Topic("sailing", ("dinghy", "mainsail", "harbour", "tiller"), "regatta",
          ("capsized", "buoyancy", "lifejacket"), ("spinnaker", "downwind", "gybe")),
    Topic("chess", ("openings", "gambit", "endgame", "rook"), "tournament",
          ("sicilian", "najdorf", "preparation"), ("zugzwang", "pawn", "opposition")),
    Topic("pottery", ("clay", "wheel", "kiln", "glaze"), "studio",
          ("teapot", "spout", "handle"), ("raku", "crackle", "smoke")),
    Topic("birding", ("binoculars", "warbler", "migration", "marsh"), "reserve",
          ("heron", "nest", "reeds"), ("kingfisher", "riverbank", "dive")),
)


def _topic_turns(topic: Topic) -> list[tuple[str, str]]:
    s = topic.shared
    return [
        (f"{topic.hub} {s[0]} {s[1]} {s[2]} {s[3]}", f"Noted, the {topic.name} plans."),
        (f"{s[0]} {s[1]} {' '.join(topic.side)}", "Sounds good."),
        (f"{s[2]} {s[3]} {' '.join(topic.gold)}", "Good to know."),
    ]


def planted_evidence_suite(n: int = 20, topics_per_conversation: int = 4, seed: int = 7) -> tuple[list[Conversation], list[QAItem]]:
    """``n`` conversations, each with one scene-routed and one direct question."""
    rng = random.Random(seed)
    convs: list[Conversation] = []
    items: list[QAItem] = []
    start = datetime(2023, 5, 1, 9, 0, 0)
    for c in range(n):
        chosen = rng.sample(TOPICS, topics_per_conversation)
        target = chosen[c % len(chosen)]
        lines: list[tuple[Topic, int, str, str]] = []
        for topic in chosen:
            for role, (q, r) in enumerate(_topic_turns(topic)):
                lines.append((topic, role, q, r))
        rng.shuffle(lines)
        turns = []
        gold_turn = -1
        gold_text = ""
        for i, (topic, role, q, r) in enumerate(lines):
            ts = (start + timedelta(days=c, minutes=5 * i)).isoformat()
            turns.append(Turn(turn=i, speaker="Sam", query=q, response=r, timestamp=ts))
            if topic is target and role == 2:
                gold_turn, gold_text = i, q
        cid = f"planted-{c:02d}"
        convs.append(Conversation(cid, turns))
        items.append(QAItem(
            question=f"what about the {' '.join(target.side)}",
            answer=gold_text, category="multi_hop", conversation_id=cid, evidence=[gold_turn],
        ))
        items.append(QAItem(
            question=f"{' '.join(target.gold)}",
            answer=gold_text, category="single_hop", conversation_id=cid, evidence=[gold_turn],
        ))
    return convs, items


def load_sample() -> tuple[Conversation, list[QAItem]]:
    """The bundled 40-turn conversation and its QA items."""
    raw = resources.files("bimem").joinpath("data/sample_conversation.json").read_text(encoding="utf-8")
    data = parse_dataset(json.loads(raw))
    return data.conversations[0], data.qa


def sample_path() -> str:
    return str(resources.files("bimem").joinpath("data/sample_conversation.json"))
