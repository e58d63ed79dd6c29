"""LLM-backed memory operators and the chat backends that run them.

Five operators sit on a :class:`ChatBackend`: fact extraction, scene
aggregation, persona distillation (one call per dimension), scene calibration
and answer generation. :class:`MockBackend` answers each one with a fixed
deterministic rule so the whole pipeline runs offline; :class:`RemoteChatBackend`
renders the prompt templates and parses strict JSON replies.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Sequence

import httpx

from . import prompts
from ._text import tokenize
from .errors import BackendError, ConfigError, OperatorParseError, TransportError
from .model import PERSONA_KEYS, FactUnit, PersonaProfile, SceneUnit, scene_text

log = logging.getLogger(__name__)

UNKNOWN = "unknown"


@dataclass
class FactDraft:
    context: str
    keywords: list[str] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)


@dataclass
class SceneDraft:
    scene_memory: str
    keywords: list[str] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)


@dataclass
class CalibrationVerdict:
    needs_calibration: bool
    added_condition: str = ""
    reason: str = ""
    coerced: bool = False


# ---------------------------------------------------------------------------
# strict JSON parsing

_FENCE_RE = re.compile(r"^```[A-Za-z0-9_-]*\s*\n?(.*?)\n?\s*```$", re.DOTALL)

SCHEMAS = ("fact", "scene", "persona", "calibration")


def _strip_fences(raw: str) -> str:
    text = raw.strip()
    m = _FENCE_RE.match(text)
    return m.group(1).strip() if m else text


def _require(obj: dict, key: str, kind: type, schema: str) -> Any:
    if key not in obj:
        raise OperatorParseError(f"{schema} response is missing required field '{key}'", field=key)
    value = obj[key]
    if kind is list:
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise OperatorParseError(f"{schema} field '{key}' must be a list of strings", field=key)
        return [v for v in value]
    if not isinstance(value, kind):
        raise OperatorParseError(f"{schema} field '{key}' must be {kind.__name__}", field=key)
    return value


def parse_operator_json(raw: str, schema: str, dimension: str | None = None):
    """Parse an operator reply into its record type.

    Markdown code fences around the payload are stripped and unknown fields
    ignored. For ``persona`` the result is a dict of dimension texts: only
    ``dimension`` is required when given, all five otherwise.
    """
    if schema not in SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}")
    text = _strip_fences(raw)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise OperatorParseError(f"{schema} response is not JSON: {exc.msg} at offset {exc.pos}", offset=exc.pos) from None
    if not isinstance(obj, dict):
        raise OperatorParseError(f"{schema} response must be a JSON object", offset=0)

    if schema == "fact":
        keywords = _require(obj, "keywords", list, schema)
        context = _require(obj, "context", str, schema)
        tags = _require(obj, "tags", list, schema)
        if not context.strip():
            raise OperatorParseError("fact field 'context' is empty", field="context")
        return FactDraft(context=context.strip(), keywords=keywords, tags=tags)

    if schema == "scene":
        memory = _require(obj, "scene_memory", str, schema)
        keywords = _require(obj, "keywords", list, schema)
        tags = _require(obj, "tags", list, schema)
        if not memory.strip():
            raise OperatorParseError("scene field 'scene_memory' is empty", field="scene_memory")
        return SceneDraft(scene_memory=memory.strip(), keywords=keywords, tags=tags)

    if schema == "persona":
        wanted = [dimension] if dimension is not None else list(PERSONA_KEYS)
        out: dict[str, str] = {}
        for key in wanted:
            value = _require(obj, key, str, schema)
            if not value.strip():
                raise OperatorParseError(f"persona field '{key}' is empty", field=key)
            out[key] = value.strip()
        return out

    needs = _require(obj, "needs_calibration", bool, schema)
    if "added condition" in obj:
        added = obj["added condition"]
    elif "added_condition" in obj:
        added = obj["added_condition"]
    else:
        raise OperatorParseError("calibration response is missing required field 'added condition'", field="added condition")
    if added is None:
        added = ""
    if not isinstance(added, str):
        raise OperatorParseError("calibration field 'added condition' must be str", field="added condition")
    reason = obj.get("reason", "")
    return CalibrationVerdict(needs_calibration=needs, added_condition=added.strip(), reason=str(reason))


# ---------------------------------------------------------------------------
# rendering helpers


def render_interaction(query: str, response: str, speaker: str | None = None, timestamp: str | None = None) -> str:
    who = speaker or "User"
    lines = []
    if timestamp:
        lines.append(f"Time: {timestamp}")
    lines.append(f"{who}: {query}")
    lines.append(f"Response: {response}")
    return "\n".join(lines)


def render_facts(facts: Sequence[FactUnit]) -> str:
    return "\n".join(f"- [{f.timestamp}] {f.content}" for f in facts)


def render_scenes(scenes: Sequence[SceneUnit]) -> str:
    return "\n".join(f"Scene {s.id}: {scene_text(s)}" for s in scenes)


# ---------------------------------------------------------------------------
# backends


class ChatBackend:
    """Runs the operators by prompting :meth:`complete` and parsing JSON.

    Subclasses provide ``complete(messages) -> str``. Parse and transport
    failures are retried up to ``max_retries`` times; each retry re-sends the
    prompt with a short reminder to return JSON only.
    """

    name = "chat"

    def __init__(self, max_retries: int = 2):
        self.max_retries = max_retries

    def complete(self, messages: list[dict[str, str]]) -> str:
        raise NotImplementedError

    def describe(self) -> dict[str, Any]:
        return {"kind": self.name}

    def _structured(self, prompt: str, schema: str, **kw: Any):
        last: BackendError | None = None
        for attempt in range(self.max_retries + 1):
            content = prompt if attempt == 0 else f"{prompt}\n\n{prompts.JSON_REMINDER}"
            try:
                raw = self.complete([{"role": "user", "content": content}])
                return parse_operator_json(raw, schema, **kw)
            except BackendError as exc:
                if not exc.retryable:
                    raise
                last = exc
                log.warning("%s operator attempt %d/%d failed: %s", schema, attempt + 1, self.max_retries + 1, exc)
        assert last is not None
        raise last

    def extract_fact(self, query: str, response: str, speaker: str | None = None, timestamp: str | None = None) -> FactDraft:
        interaction = render_interaction(query, response, speaker, timestamp)
        return self._structured(prompts.FACT_PROMPT.format(interaction=interaction), "fact")

    def aggregate_scene(self, facts: Sequence[FactUnit]) -> SceneDraft:
        return self._structured(prompts.SCENE_PROMPT.format(facts_content=render_facts(facts)), "scene")

    def distill_persona_dimension(self, scenes: Sequence[SceneUnit], dimension: str) -> str:
        prompt = prompts.PERSONA_PROMPT.format(
            dimension=dimension,
            dimension_instruction=prompts.DIMENSION_INSTRUCTIONS[dimension],
            all_scenes_content=render_scenes(scenes),
        )
        return self._structured(prompt, "persona", dimension=dimension)[dimension]

    def calibrate_scene(self, scene: SceneUnit, persona: PersonaProfile) -> CalibrationVerdict:
        prompt = prompts.CALIBRATION_PROMPT.format(user_persona=persona.render(), current_scene=scene_text(scene))
        return self._structured(prompt, "calibration")

    def generate_answer(self, query: str, context: str) -> str:
        prompt = prompts.ANSWER_PROMPT.format(context=context, query=query)
        last: BackendError | None = None
        for attempt in range(self.max_retries + 1):
            try:
                return self.complete([{"role": "user", "content": prompt}])
            except BackendError as exc:
                if not exc.retryable:
                    raise
                last = exc
        assert last is not None
        raise last


_ALPHA_RE = re.compile(r"[A-Za-z]+")

# Mock persona lexicons; a scene keyword feeds a dimension when it is listed here.
LEXICONS: dict[str, frozenset[str]] = {
    "basic_info": frozenset(
        "name years born lives live living city town work works working job occupation student "
        "teacher engineer nurse doctor counselor office school college university degree moved "
        "hometown country shelter career retired".split()
    ),
    "interests": frozenset(
        "hiking photography painting music reading books cooking camping travel traveling travelling "
        "running swimming guitar piano dancing gardening movies games gaming sports yoga pottery baking "
        "fishing cycling climbing writing poetry food recipes spicy mild nature mountains beach concerts "
        "hobby hobbies".split()
    ),
    "personality": frozenset(
        "kind shy outgoing calm anxious happy excited nervous proud curious patient brave courage "
        "confident empathy empathetic creative optimistic stressed grateful passionate friendly caring "
        "funny introvert extrovert cheerful worried".split()
    ),
    "values": frozenset(
        "honesty community faith belief beliefs freedom equality justice acceptance authentic "
        "authenticity kindness support helping volunteer volunteering education health growth respect "
        "inclusion environment charity activism rights family".split()
    ),
    "relationships": frozenset(
        "friend friends family mother father sister brother husband wife partner girlfriend "
        "boyfriend children kids daughter son colleague colleagues neighbor grandma grandmother "
        "mentor parents cousin".split()
    ),
}


def _top_keywords(text: str, limit: int) -> list[str]:
    counts = Counter(t.lower() for t in _ALPHA_RE.findall(text) if len(t) > 3)
    return [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:limit]]


_LABEL_RE = re.compile(r"^(?:PERSONA/\w+|SCENE \d+|FACT \d+(?: \[[^\]]*\])?):\s*")
_SENT_SPLIT_RE = re.compile(r"(?<=[.!?;])\s+")


def context_sentences(context: str) -> list[str]:
    out = []
    for line in context.splitlines():
        line = _LABEL_RE.sub("", line.strip())
        for sent in _SENT_SPLIT_RE.split(line):
            sent = sent.strip().rstrip(";").strip()
            if sent:
                out.append(sent)
    return out


class MockBackend(ChatBackend):
    """Deterministic offline stand-in: every operator is a fixed text rule."""

    name = "mock"

    def complete(self, messages: list[dict[str, str]]) -> str:
        raise BackendError("the mock backend answers operators directly; it has no free-form completion")

    def extract_fact(self, query: str, response: str, speaker: str | None = None, timestamp: str | None = None) -> FactDraft:
        source = query if query.strip() else response
        context = source.strip()[:200]
        return FactDraft(context=context, keywords=_top_keywords(context, 5), tags=[])

    def aggregate_scene(self, facts: Sequence[FactUnit]) -> SceneDraft:
        memory = "; ".join(f.content for f in facts)[:500]
        counts = Counter(kw for f in facts for kw in f.keywords)
        keywords = [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:8]]
        tags = sorted({t for f in facts for t in f.tags})
        return SceneDraft(scene_memory=memory, keywords=keywords, tags=tags)

    def distill_persona_dimension(self, scenes: Sequence[SceneUnit], dimension: str) -> str:
        lexicon = LEXICONS[dimension]
        hits = [kw for s in scenes for kw in s.keywords if kw.lower() in lexicon]
        hits = list(dict.fromkeys(hits))
        return ", ".join(hits) if hits else UNKNOWN

    def calibrate_scene(self, scene: SceneUnit, persona: PersonaProfile) -> CalibrationVerdict:
        return CalibrationVerdict(False, "", "mock")

    def generate_answer(self, query: str, context: str) -> str:
        wanted = set(tokenize(query))
        best = ""
        best_overlap = -1
        for sent in context_sentences(context):
            overlap = len(wanted & set(tokenize(sent)))
            if overlap > best_overlap:
                best, best_overlap = sent, overlap
        return best


def _chat_endpoint(url: str) -> str:
    url = url.rstrip("/")
    return url if url.endswith("/chat/completions") else url + "/chat/completions"


class RemoteChatBackend(ChatBackend):
    """OpenAI-compatible chat-completions client.

    Posts ``{"model", "messages", "temperature"}`` and reads
    ``choices[0].message.content``.
    """

    name = "remote"

    def __init__(
        self,
        url: str,
        model: str,
        api_key: str | None = None,
        temperature: float = 0.0,
        max_retries: int = 2,
        max_in_flight: int = 4,
        timeout: float = 120.0,
        client: httpx.Client | None = None,
    ):
        super().__init__(max_retries=max_retries)
        if temperature < 0:
            raise ConfigError("temperature must be >= 0")
        self.url = _chat_endpoint(url)
        self.model = model
        self.api_key = api_key
        self.temperature = temperature
        self._client = client or httpx.Client(timeout=timeout)
        self._slots = threading.BoundedSemaphore(max_in_flight)

    @classmethod
    def from_env(cls, **kwargs: Any) -> "RemoteChatBackend":
        url = os.environ.get("BIMEM_CHAT_URL")
        model = os.environ.get("BIMEM_CHAT_MODEL")
        if not url or not model:
            raise ConfigError("BIMEM_CHAT_URL and BIMEM_CHAT_MODEL must be set for the remote backend")
        return cls(url, model, api_key=os.environ.get("BIMEM_API_KEY"), **kwargs)

    def describe(self) -> dict[str, Any]:
        return {"kind": "remote", "model": self.model, "temperature": self.temperature}

    def complete(self, messages: list[dict[str, str]]) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        payload = {"model": self.model, "messages": messages, "temperature": self.temperature}
        try:
            with self._slots:
                resp = self._client.post(self.url, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"chat request failed: {exc}") from exc
        if resp.status_code >= 400:
            raise TransportError(f"chat request failed with HTTP {resp.status_code}", resp.status_code)
        try:
            body = resp.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed chat response: {exc!r}") from exc
        if not isinstance(content, str):
            raise TransportError("chat response content is not text")
        return content


def make_backend(kind: str, **kwargs: Any) -> ChatBackend:
    if kind == "mock":
        return MockBackend()
    if kind == "remote":
        return RemoteChatBackend.from_env(**kwargs)
    raise ConfigError(f"unknown chat backend {kind!r}")


# ---------------------------------------------------------------------------
# operator entry points


def extract_fact(backend: ChatBackend, interaction: tuple[str, str], speaker: str | None = None, timestamp: str | None = None) -> FactDraft:
    query, response = interaction
    if not query.strip() and not response.strip():
        raise ValueError("interaction has neither query nor response text")
    return backend.extract_fact(query, response, speaker, timestamp)


def aggregate_scene(backend: ChatBackend, facts: Sequence[FactUnit]) -> SceneDraft:
    if not facts:
        raise ValueError("cannot aggregate an empty fact cluster")
    return backend.aggregate_scene(list(facts))


def distill_persona_dimension(backend: ChatBackend, scenes: Sequence[SceneUnit], dimension: str) -> str:
    if dimension not in PERSONA_KEYS:
        raise ValueError(f"unknown persona dimension {dimension!r}")
    if not scenes:
        raise ValueError("cannot distill a persona from no scenes")
    text = backend.distill_persona_dimension(list(scenes), dimension)
    return text.strip() or UNKNOWN


def calibrate_scene(backend: ChatBackend, scene: SceneUnit, persona: PersonaProfile) -> CalibrationVerdict:
    verdict = backend.calibrate_scene(scene, persona)
    if verdict.needs_calibration and not verdict.added_condition.strip():
        log.warning("scene %d: calibration requested without a condition; treating as consistent", scene.id)
        return CalibrationVerdict(False, "", verdict.reason, coerced=True)
    if not verdict.needs_calibration and verdict.added_condition:
        return CalibrationVerdict(False, "", verdict.reason, coerced=True)
    return verdict


def generate_answer(backend: ChatBackend, query: str, context: str) -> str:
    if not query.strip():
        raise ValueError("query is empty")
    if not context.strip() and isinstance(backend, MockBackend):
        return ""
    return backend.generate_answer(query, context)
