import math
import random
from collections import Counter

import pytest
from factories import hand_bank, random_bank, random_text

from bimem._text import tokenize
from bimem.embedding import HashEmbedder, cosine_sim
from bimem.errors import ConfigError
from bimem.model import IntegrityError, RetrievalUnit
from bimem.retrieval import (
    LexicalIndex,
    RetrievalConfig,
    Retriever,
    bm25_score,
    check_provenance,
    hybrid_score,
    initial_search,
    retrieve,
    spread_activation,
    unit_embedding,
    unit_keys,
    unit_text,
)


def _bm25_oracle(docs, query, k1=1.2, b=0.75):
    n = len(docs)
    avg = sum(len(d) for d in docs) / n
    df = Counter(t for d in docs for t in set(d))
    out = []
    for d in docs:
        tf = Counter(d)
        s = 0.0
        for t in set(query):
            if tf[t]:
                idf = math.log(1 + (n - df[t] + 0.5) / (df[t] + 0.5))
                s += idf * tf[t] * (k1 + 1) / (tf[t] + k1 * (1 - b + b * len(d) / avg))
        out.append(s)
    return out


def test_bm25_hand_value():
    index = LexicalIndex([["apple", "x"], ["b", "c"], ["d", "e"]])
    expected = math.log(1 + (3 - 1 + 0.5) / (1 + 0.5)) * (1 * 2.2) / (1 + 1.2)
    assert bm25_score(index, ["apple"], 0) == pytest.approx(expected, abs=1e-12)
    assert bm25_score(index, ["apple"], 1) == 0.0


def test_bm25_absent_term_and_single_doc():
    index = LexicalIndex([["a", "b"], ["c"]])
    assert list(index.scores(["zzz"])) == [0.0, 0.0]
    assert bm25_score(LexicalIndex([["solo"]]), ["solo"], 0) > 0


def test_bm25_matches_scalar_oracle():
    rng = random.Random(21)
    for _ in range(30):
        docs = [tokenize(random_text(rng, 1, 10)) for _ in range(rng.randint(1, 12))]
        query = tokenize(random_text(rng, 1, 5))
        got = LexicalIndex(docs).scores(query)
        assert list(got) == pytest.approx(_bm25_oracle(docs, query), abs=1e-12)


def test_config_invariants():
    for bad in ({"k": 0}, {"m": -1}, {"alpha": 1.5}, {"strategy": "sideways"}):
        with pytest.raises(ConfigError):
            RetrievalConfig(**bad)
    assert RetrievalConfig.preset("single_hop").k == 35
    assert RetrievalConfig.preset("multi_hop").k == 25
    assert RetrievalConfig().size_bound() == 30 * 4
    assert RetrievalConfig(k=2, m=0).size_bound() == 4


def _pool_oracle(bank, query, alpha):
    emb = HashEmbedder(bank.dimension)
    keys = unit_keys(bank)
    qv = emb.embed(query)
    dense = [round(cosine_sim(qv, unit_embedding(bank, *k)), 12) if any(qv) else 0.0 for k in keys]
    lex = [round(s, 12) for s in _bm25_oracle([tokenize(unit_text(bank, *k)) for k in keys], tokenize(query))]
    scores = dense if alpha == 1 else lex
    return sorted(range(len(keys)), key=lambda i: (-scores[i], i))


@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_degenerate_alpha_matches_single_signal(alpha):
    rng = random.Random(int(alpha) + 40)
    for _ in range(15):
        bank = random_bank(rng, dim=64)
        query = random_text(rng, 1, 4)
        r = Retriever(bank)
        got = r.rank(r.hybrid_scores(query, RetrievalConfig(alpha=alpha)))
        assert got == _pool_oracle(bank, query, alpha)


def test_double_maximizer_scores_one():
    bank = hand_bank(["chess violin", "river garden", "coffee oven"], [{0}, {1}, {2}], ["aa", "bb", "cc"])
    r = Retriever(bank)
    for alpha in (0.0, 0.3, 0.5, 1.0):
        assert hybrid_score("chess violin", "fact", 0, r, RetrievalConfig(alpha=alpha)) == pytest.approx(1.0)
    with pytest.raises(IntegrityError):
        hybrid_score("x", "fact", 99, r)


def test_exact_text_fact_ranks_first():
    bank = hand_bank(["chess violin tennis", "river garden", "coffee oven"], [{0, 1, 2}], ["museum"])
    top = initial_search("chess violin tennis", bank, RetrievalConfig(k=3))
    assert top[0].key == ("fact", 0)
    assert all(u.origin == "initial" for u in top)


def test_large_k_returns_whole_pool():
    bank = hand_bank(["a b", "c d"], [{0, 1}])
    assert len(initial_search("a", bank, RetrievalConfig(k=100))) == 5 + 1 + 2


def test_persona_only_query():
    bank = hand_bank(["river garden", "coffee oven"], [{0, 1}], ["museum"], persona={"interests": "sailing pottery"})
    keys = [u.key for u in initial_search("pottery", bank, RetrievalConfig(k=1))]
    assert keys == [("persona", "interests")]


def test_constant_pool_ties_follow_level_order():
    bank = hand_bank(["river", "coffee"], [{0}, {1}], ["garden", "oven"])
    keys = [u.key for u in initial_search("zebra", bank, RetrievalConfig(k=9))]
    assert keys == unit_keys(bank)


def test_empty_bank_gives_empty_result():
    bank = hand_bank([], [])
    bank.persona.dimensions.clear()
    assert initial_search("x", bank) == []


def test_spread_from_fact_adds_parent_scene():
    bank = hand_bank(["river garden", "coffee oven"], [{0}, {1}])
    out = spread_activation([RetrievalUnit("fact", 1, 0.9)], bank)
    assert out.keys() == [("fact", 1), ("scene", 1)]
    assert out.units[1].origin == "spread_from_fact"


def test_spread_from_scene_adds_top_m_members():
    texts = ["river garden piano", "river garden", "river", "chess", "tennis"]
    bank = hand_bank(texts, [{0, 1, 2, 3, 4}], ["river garden piano"])
    out = spread_activation([RetrievalUnit("scene", 0, 0.9)], bank, RetrievalConfig(m=3))
    assert len(out) == 4
    emb = HashEmbedder(256)
    a1 = sorted(range(5), key=lambda i: (-cosine_sim(emb.embed("river garden piano"), emb.embed(texts[i])), i))
    assert out.fact_ids() == a1[:3] == [0, 1, 2]
    assert {u.origin for u in out.units[1:]} == {"spread_from_scene"}


def test_persona_is_an_anchor():
    bank = hand_bank(["river"], [{0}])
    out = spread_activation([RetrievalUnit("persona", "values", 1.0)], bank)
    assert out.keys() == [("persona", "values")]


def test_dedup_of_shared_parent():
    bank = hand_bank(["apple banana", "apple cherry", "violin"], [{0, 1}, {2}], ["zzz", "yyy"])
    cfg = RetrievalConfig(k=2, m=3)
    initial = initial_search("apple", bank, cfg)
    assert {u.key for u in initial} == {("fact", 0), ("fact", 1)}
    out = retrieve("apple", bank, cfg)
    assert len(out) == 3
    assert out.keys()[2] == ("scene", 0)


def test_first_seen_origin_is_kept():
    bank = hand_bank(["apple", "pear"], [{0, 1}], ["apple pear"])
    initial = [RetrievalUnit("scene", 0, 1.0), RetrievalUnit("fact", 0, 0.5)]
    out = spread_activation(initial, bank, RetrievalConfig(m=2))
    origins = {u.key: u.origin for u in out}
    assert origins[("fact", 0)] == "initial"
    assert origins[("fact", 1)] == "spread_from_scene"
    assert len(out) == 3


def test_dangling_reference_is_an_integrity_error():
    bank = hand_bank(["apple"], [{0}])
    with pytest.raises(IntegrityError, match="42"):
        spread_activation([RetrievalUnit("fact", 42, 1.0)], bank)


def test_size_bound_and_provenance_on_random_banks():
    rng = random.Random(99)
    for _ in range(60):
        bank = random_bank(rng)
        cfg = RetrievalConfig(k=rng.randint(1, 40), m=rng.randint(0, 5))
        out = retrieve(random_text(rng, 1, 6), bank, cfg)
        assert len(out) <= cfg.size_bound()
        assert check_provenance(out, bank) == []
        assert len(set(out.keys())) == len(out)


@pytest.mark.parametrize("strategy", ["hierarchical", "scene2fact", "fact2scene", "topdown", "bottomup"])
def test_strategies_run_and_respect_their_rules(strategy):
    rng = random.Random(3)
    for _ in range(10):
        bank = random_bank(rng)
        out = retrieve(random_text(rng), bank, RetrievalConfig(k=5, strategy=strategy))
        origins = {u.origin for u in out}
        if strategy == "hierarchical":
            assert origins <= {"initial"}
        if strategy == "scene2fact":
            assert "spread_from_fact" not in origins
        if strategy == "fact2scene":
            assert "spread_from_scene" not in origins
        if strategy == "topdown":
            assert len([u for u in out if u.level == "persona"]) == 5
            assert len([u for u in out if u.level == "scene"]) == min(15, len(bank.scenes))
        if strategy == "bottomup":
            assert len([u for u in out if u.level == "fact" and u.origin == "initial"]) == min(5, len(bank.facts))
        assert check_provenance(out, bank) == []


def test_retrieve_is_deterministic():
    bank = random_bank(random.Random(8), 25)
    assert retrieve("river garden", bank).keys() == retrieve("river garden", bank).keys()
