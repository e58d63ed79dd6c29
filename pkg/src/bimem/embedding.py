"""Embedding providers and cosine similarity.

Two providers ship: :class:`HashEmbedder`, a deterministic bag-of-tokens
hashing embedder that needs no model weights, and :class:`RemoteEmbedder`,
which talks to an OpenAI-style ``/embeddings`` endpoint.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import threading
from typing import Any, Sequence

import httpx
import numpy as np

from ._text import tokenize
from .errors import BimemError, ConfigError, DataError, TransportError
from .model import Vector

log = logging.getLogger(__name__)


class EmbeddingInputError(BimemError, ValueError):
    pass


class ZeroNormError(BimemError, ValueError):
    pass


class DimensionMismatchError(BimemError, ValueError):
    pass


def cosine_sim(a: Sequence[float], b: Sequence[float]) -> float:
    """dot(a, b) / (|a| |b|). Raises on zero-norm or mismatched inputs."""
    if len(a) != len(b):
        raise DimensionMismatchError(f"vector lengths differ: {len(a)} vs {len(b)}")
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b):
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine similarity undefined for a zero vector")
    sim = dot / (math.sqrt(na) * math.sqrt(nb))
    return max(-1.0, min(1.0, sim))


def similarity_or_zero(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine similarity for ranking: zero vectors score 0 instead of raising."""
    try:
        return cosine_sim(a, b)
    except ZeroNormError:
        return 0.0


def _bucket(token: str, dim: int, seed: int) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little", signed=False)
    ).digest()
    return int.from_bytes(digest, "little") % dim


# Function words dropped by HashEmbedder(stopwords=True). Without this, short
# chat turns share enough of them to clear the edge threshold pairwise.
STOPWORDS = frozenset(
    """a about after again all also am an and any are as at be been before being both but by can
    could did do does each few for from had has have he her here him his how i if in into is it its
    just me more most my no not of on or other our out over own same she should so some such than
    that the their them then there these they this those to too up very was we were what when where
    which who why will with would you your""".split()
)


def deterministic_embed(text: str, dim: int, seed: int = 0, stopwords: frozenset[str] | None = None) -> Vector:
    """Hash each token to one of ``dim`` buckets, count, then L2-normalize.

    With ``stopwords`` those tokens are skipped, unless that would leave
    nothing. Token-free text gives the zero vector.
    """
    if dim < 8:
        raise ConfigError(f"hash embedding dimension must be >= 8, got {dim}")
    tokens = tokenize(text)
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords] or tokens
    counts = [0] * dim
    for token in tokens:
        counts[_bucket(token, dim, seed)] += 1
    norm = math.sqrt(sum(c * c for c in counts))
    if norm == 0.0:
        return tuple(0.0 for _ in counts)
    return tuple(c / norm for c in counts)


class EmbeddingProvider:
    """Base contract: ``embed`` a non-empty text to a vector of ``dimension`` floats."""

    name = "base"

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    def embed(self, text: str) -> Vector:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[Vector]:
        cleaned = [_clean(t) for t in texts]
        return self._embed_clean(cleaned)

    def _embed_clean(self, texts: list[str]) -> list[Vector]:
        raise NotImplementedError

    def describe(self) -> dict[str, Any]:
        return {"kind": self.name, "dimension": self.dimension}


def _clean(text: str) -> str:
    stripped = text.strip()
    if not stripped:
        raise EmbeddingInputError("cannot embed empty text")
    return stripped


def embed_text(provider: EmbeddingProvider, text: str) -> Vector:
    return provider.embed(text)


class HashEmbedder(EmbeddingProvider):
    name = "hash"

    def __init__(self, dimension: int = 256, seed: int = 0, stopwords: bool = False):
        if dimension < 8:
            raise ConfigError(f"hash embedding dimension must be >= 8, got {dimension}")
        self._dimension = dimension
        self.seed = seed
        self.stopwords = stopwords

    @property
    def dimension(self) -> int:
        return self._dimension

    def _embed_clean(self, texts: list[str]) -> list[Vector]:
        stop = STOPWORDS if self.stopwords else None
        return [deterministic_embed(t, self._dimension, self.seed, stop) for t in texts]

    def describe(self) -> dict[str, Any]:
        return {"kind": "hash", "dimension": self._dimension, "seed": self.seed, "stopwords": self.stopwords}


def _endpoint(base: str, suffix: str) -> str:
    base = base.rstrip("/")
    return base if base.endswith(suffix) else base + suffix


class RemoteEmbedder(EmbeddingProvider):
    """Client for an HTTP embeddings endpoint.

    Request body is ``{"model": ..., "input": [texts]}``. The response may be
    OpenAI-shaped (``{"data": [{"embedding": [...]}, ...]}``) or a bare
    ``{"embeddings": [[...], ...]}``. Results are cached per instance so equal
    texts always map to equal vectors.
    """

    name = "remote"

    def __init__(
        self,
        url: str,
        model: str,
        api_key: str | None = None,
        dimension: int | None = None,
        max_in_flight: int = 4,
        max_retries: int = 2,
        batch_size: int = 64,
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ):
        self.url = _endpoint(url, "/embeddings")
        self.model = model
        self.api_key = api_key
        self._dimension = dimension
        self.max_retries = max_retries
        self.batch_size = batch_size
        self._client = client or httpx.Client(timeout=timeout)
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._lock = threading.Lock()
        self._cache: dict[str, Vector] = {}

    @classmethod
    def from_env(cls, **kwargs: Any) -> "RemoteEmbedder":
        url = os.environ.get("BIMEM_EMBED_URL")
        if not url:
            raise ConfigError("BIMEM_EMBED_URL is not set")
        model = os.environ.get("BIMEM_EMBED_MODEL", "all-MiniLM-L6-v2")
        return cls(url, model, api_key=os.environ.get("BIMEM_API_KEY"), **kwargs)

    @property
    def dimension(self) -> int:
        if self._dimension is None:
            self._dimension = len(self.embed("dimension probe"))
        return self._dimension

    def describe(self) -> dict[str, Any]:
        return {"kind": "remote", "dimension": self.dimension, "model": self.model}

    def _embed_clean(self, texts: list[str]) -> list[Vector]:
        with self._lock:
            missing = list(dict.fromkeys(t for t in texts if t not in self._cache))
        for start in range(0, len(missing), self.batch_size):
            batch = missing[start : start + self.batch_size]
            vectors = self._request(batch)
            with self._lock:
                for text, vec in zip(batch, vectors):
                    self._cache.setdefault(text, vec)
        with self._lock:
            return [self._cache[t] for t in texts]

    def _request(self, batch: list[str]) -> list[Vector]:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        payload = {"model": self.model, "input": batch}
        last: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                with self._slots:
                    resp = self._client.post(self.url, json=payload, headers=headers)
                if resp.status_code >= 400:
                    raise TransportError(f"embedding request failed with HTTP {resp.status_code}", resp.status_code)
                return self._parse(resp.json(), len(batch))
            except httpx.HTTPError as exc:
                last = TransportError(f"embedding request failed: {exc}")
            except TransportError as exc:
                last = exc
            log.warning("embedding attempt %d/%d failed: %s", attempt + 1, self.max_retries + 1, last)
        assert last is not None
        raise last

    def _parse(self, body: Any, expected: int) -> list[Vector]:
        if isinstance(body, dict) and "data" in body:
            rows = sorted(body["data"], key=lambda r: r.get("index", 0))
            vectors = [r["embedding"] for r in rows]
        elif isinstance(body, dict) and "embeddings" in body:
            vectors = body["embeddings"]
        else:
            raise TransportError("embedding response has neither 'data' nor 'embeddings'")
        if len(vectors) != expected:
            raise TransportError(f"expected {expected} embeddings, got {len(vectors)}")
        out = [tuple(float(x) for x in v) for v in vectors]
        for vec in out:
            if self._dimension is not None and len(vec) != self._dimension:
                raise DimensionMismatchError(f"embedding length {len(vec)} != {self._dimension}")
            if not all(math.isfinite(x) for x in vec):
                raise TransportError("embedding response contains non-finite values")
            if self._dimension is None:
                self._dimension = len(vec)
        return out


def provider_from_description(desc: dict[str, Any]) -> EmbeddingProvider:
    """Rebuild a provider from the ``embedder`` entry stored in bank provenance."""
    kind = desc.get("kind")
    if kind == "hash":
        return HashEmbedder(int(desc["dimension"]), int(desc.get("seed", 0)), bool(desc.get("stopwords", False)))
    if kind == "remote":
        emb = RemoteEmbedder.from_env(dimension=int(desc["dimension"]))
        emb.model = desc.get("model", emb.model)
        return emb
    raise DataError(f"unknown embedder kind {kind!r}", "$.provenance.embedder.kind")


def as_matrix(vectors: Sequence[Sequence[float]], dim: int) -> np.ndarray:
    if not vectors:
        return np.zeros((0, dim), dtype=np.float64)
    return np.ascontiguousarray(np.asarray(vectors, dtype=np.float64))
