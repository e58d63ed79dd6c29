import random

from factories import random_bank

from bimem.model import SceneUnit, scene_text, validate_bank


def test_valid_bank_has_no_violations(rng):
    assert validate_bank(random_bank(rng, 12)) == []


def test_fact_in_two_scenes_is_one_partition_violation(rng):
    bank = random_bank(random.Random(5), 6)
    # move everything into scenes 0 and 1, then put fact 3 in both
    bank.scenes = {k: v for k, v in bank.scenes.items() if k in (0, 1)} if len(bank.scenes) >= 2 else bank.scenes
    emb = next(iter(bank.scenes.values())).embedding
    bank.scenes = {
        0: SceneUnit(0, "a", {0, 1, 2, 3}, emb),
        1: SceneUnit(1, "b", {3, 4, 5}, emb),
    }
    problems = validate_bank(bank)
    assert len(problems) == 1
    assert problems[0].startswith("partition:")
    assert "fact 3" in problems[0]


def _pairwise_asymmetries(bank):
    out = []
    for i, f in bank.facts.items():
        for j in f.edges:
            if j in bank.facts and i not in bank.facts[j].edges:
                out.append((i, j))
    return out


def test_one_sided_edge_is_one_symmetry_violation():
    bank = random_bank(random.Random(9), 8)
    for f in bank.facts.values():
        f.edges.clear()
    bank.facts[2].edges.add(5)
    assert _pairwise_asymmetries(bank) == [(2, 5)]
    problems = validate_bank(bank)
    assert len(problems) == 1
    assert problems[0].startswith("symmetry:") and "fact 2" in problems[0] and "5" in problems[0]


def test_structural_violations_are_named():
    bank = random_bank(random.Random(3), 5)
    bank.facts[1].edges.add(1)
    bank.facts[0].embedding = bank.facts[0].embedding[:-1]
    del bank.persona.dimensions["values"]
    first = min(bank.scenes)
    bank.scenes[first].members.add(99)
    rules = {p.split(":")[0] for p in validate_bank(bank)}
    assert {"self-edge", "dimension", "persona", "members"} <= rules


def test_uncovered_fact_is_partition_violation():
    bank = random_bank(random.Random(4), 5)
    for s in bank.scenes.values():
        s.members.discard(4)
    bank.scenes = {k: s for k, s in bank.scenes.items() if s.members}
    problems = validate_bank(bank)
    assert any(p.startswith("partition:") and "fact 4" in p for p in problems)


def test_partition_property_on_random_banks():
    rng = random.Random(77)
    for _ in range(50):
        bank = random_bank(rng)
        assert validate_bank(bank) == []
        assert sum(len(s.members) for s in bank.scenes.values()) == len(bank.facts)


def test_scene_text_without_delta():
    assert scene_text(SceneUnit(0, "S", {0}, ())) == "S"


def test_scene_text_appends_delta_with_space():
    assert scene_text(SceneUnit(0, "S", {0}, (), delta="D")) == "S D"
    scene = SceneUnit(0, "camping trip plans", {0}, (), delta="This aligns with her love of nature")
    assert scene_text(scene) == "camping trip plans This aligns with her love of nature"
    assert scene_text(scene) == scene_text(scene)
