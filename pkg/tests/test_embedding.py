import json
import math

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bimem.embedding import (
    DimensionMismatchError,
    EmbeddingInputError,
    HashEmbedder,
    RemoteEmbedder,
    ZeroNormError,
    cosine_sim,
    deterministic_embed,
    embed_text,
    provider_from_description,
    similarity_or_zero,
)
from bimem.errors import TransportError


def test_embedding_is_deterministic():
    p = HashEmbedder(64)
    assert embed_text(p, "hello") == embed_text(p, "hello")
    assert len(embed_text(p, "hello")) == 64


def test_embedding_trims_whitespace():
    p = HashEmbedder(64)
    assert embed_text(p, "hello") == embed_text(p, "hello ")


def test_distinct_words_give_distinct_vectors():
    p = HashEmbedder(256)
    assert embed_text(p, "cat") != embed_text(p, "dog")


def test_empty_text_is_an_input_error():
    with pytest.raises(EmbeddingInputError):
        HashEmbedder(64).embed("   ")


def test_cosine_examples():
    assert cosine_sim((1.0, 2.0, 3.0), (1.0, 2.0, 3.0)) == pytest.approx(1.0)
    assert cosine_sim((1.0, 0.0), (0.0, 1.0)) == 0.0
    assert cosine_sim((1.0, 1.0), (1.0, 0.0)) == pytest.approx(0.70710678, abs=1e-8)


def test_cosine_zero_vector():
    with pytest.raises(ZeroNormError):
        cosine_sim((0.0, 0.0), (1.0, 0.0))
    assert similarity_or_zero((0.0, 0.0), (1.0, 0.0)) == 0.0


def test_cosine_length_mismatch():
    with pytest.raises(DimensionMismatchError):
        cosine_sim((1.0,), (1.0, 0.0))


vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=3).filter(
    lambda v: math.sqrt(sum(x * x for x in v)) > 1e-3
)


@given(vectors, vectors)
def test_cosine_symmetric(a, b):
    assert cosine_sim(a, b) == pytest.approx(cosine_sim(b, a), abs=1e-12)
    assert -1.0 <= cosine_sim(a, b) <= 1.0


@given(vectors, st.floats(1e-3, 1e3))
def test_cosine_scale_invariant(a, c):
    assert cosine_sim(a, [c * x for x in a]) == pytest.approx(1.0, abs=1e-9)


def test_hash_embed_examples():
    same = cosine_sim(deterministic_embed("alpha beta", 256), deterministic_embed("alpha beta", 256))
    assert same == pytest.approx(1.0)
    assert cosine_sim(deterministic_embed("alpha", 256), deterministic_embed("beta", 256)) == 0.0
    # normalized count vectors (1,1,0)/sqrt2 and (1,0,1)/sqrt2 -> 1/2
    assert cosine_sim(deterministic_embed("alpha beta", 256), deterministic_embed("alpha gamma", 256)) == pytest.approx(0.5, abs=1e-9)


def test_hash_embed_counts_repeated_tokens():
    v = deterministic_embed("alpha alpha beta", 256)
    nonzero = sorted(x for x in v if x)
    assert nonzero == pytest.approx([1 / math.sqrt(5), 2 / math.sqrt(5)])


def test_hash_embed_is_stable_across_runs():
    # frozen bucket: blake2b keyed by the seed, not Python's salted hash()
    v = deterministic_embed("alpha", 256)
    assert v.index(1.0) == 95


def test_stopword_filter_keeps_content_words():
    stop = HashEmbedder(256, stopwords=True)
    plain = HashEmbedder(256)
    assert stop.embed("the garden") == plain.embed("garden")
    # all-stopword text falls back to its raw tokens
    assert stop.embed("the") == plain.embed("the")


def test_token_free_text_is_zero_vector():
    assert not any(deterministic_embed("!!!", 16))


def _transport(calls, dim=4, status=200):
    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        calls.append((request, body))
        if status != 200:
            return httpx.Response(status)
        data = [{"index": i, "embedding": [float(len(t))] + [1.0] * (dim - 1)} for i, t in enumerate(body["input"])]
        return httpx.Response(200, json={"data": data})

    return httpx.MockTransport(handler)


def test_remote_embedder_wire_format():
    calls = []
    emb = RemoteEmbedder("http://embed.test/v1", "mini", api_key="sek", client=httpx.Client(transport=_transport(calls)))
    vecs = emb.embed_many(["ab", "abc", "ab"])
    assert vecs[0] == vecs[2] == (2.0, 1.0, 1.0, 1.0)
    request, body = calls[0]
    assert str(request.url) == "http://embed.test/v1/embeddings"
    assert request.headers["authorization"] == "Bearer sek"
    assert body == {"model": "mini", "input": ["ab", "abc"]}
    assert emb.dimension == 4
    emb.embed("ab")
    assert len(calls) == 1  # cached


def test_remote_embedder_bare_embeddings_shape():
    def handler(request):
        n = len(json.loads(request.content)["input"])
        return httpx.Response(200, json={"embeddings": [[0.5, 0.5]] * n})

    emb = RemoteEmbedder("http://e/embeddings", "m", client=httpx.Client(transport=httpx.MockTransport(handler)))
    assert emb.embed("x") == (0.5, 0.5)


def test_remote_embedder_http_error_carries_status():
    calls = []
    emb = RemoteEmbedder("http://e", "m", max_retries=1, client=httpx.Client(transport=_transport(calls, status=503)))
    with pytest.raises(TransportError) as info:
        emb.embed("x")
    assert info.value.status == 503
    assert info.value.retryable
    assert len(calls) == 2


def test_remote_embedder_from_env(monkeypatch):
    monkeypatch.setenv("BIMEM_EMBED_URL", "http://e.test")
    monkeypatch.setenv("BIMEM_API_KEY", "k")
    emb = RemoteEmbedder.from_env(dimension=8)
    assert emb.url == "http://e.test/embeddings"
    assert emb.api_key == "k"


def test_provider_round_trips_through_description():
    p = HashEmbedder(48, seed=3, stopwords=True)
    q = provider_from_description(p.describe())
    assert q.embed("river garden") == p.embed("river garden")
