"""Answer generation context, QA metrics, dataset loading and the eval harness."""

from __future__ import annotations

import json
import math
import re
import string
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import operators
from .construction import ConstructionConfig, Conversation, Turn, construct_memory
from .embedding import EmbeddingProvider
from .errors import BimemError, DataError
from .model import IntegrityError, MemoryBank, RetrievedSet, scene_text
from .operators import ChatBackend
from .retrieval import PRESET_K, Retriever, RetrievalConfig

CATEGORIES = ("single_hop", "multi_hop", "open_domain", "temporal")
SKIPPED_CATEGORIES = ("adversarial",)
DEFAULT_TOKEN_BUDGET = 4000


@dataclass
class QAItem:
    question: str
    answer: str
    category: str
    conversation_id: str
    # turn ids of the supporting interactions, when the dataset provides them
    evidence: list[int] = field(default_factory=list)


@dataclass
class Dataset:
    conversations: list[Conversation]
    qa: list[QAItem]
    skipped: int = 0


# ---------------------------------------------------------------------------
# context assembly


def _count_tokens(line: str) -> int:
    return len(line.split())


def context_lines(retrieved: RetrievedSet, bank: MemoryBank) -> list[tuple[str, str]]:
    """(level, line) pairs in layout order: persona, scenes, facts."""
    persona, scenes, facts = [], [], []
    for unit in retrieved:
        if unit.level == "persona":
            entry = bank.persona.dimensions.get(str(unit.ref_id))
            if entry is None:
                raise IntegrityError(f"persona dimension {unit.ref_id!r} is not in the bank")
            persona.append(("persona", f"PERSONA/{unit.ref_id}: {entry.text}"))
        elif unit.level == "scene":
            scene = bank.scenes.get(int(unit.ref_id))
            if scene is None:
                raise IntegrityError(f"scene {unit.ref_id} is not in the bank")
            scenes.append(("scene", f"SCENE {scene.id}: {scene_text(scene)}"))
        elif unit.level == "fact":
            fact = bank.facts.get(int(unit.ref_id))
            if fact is None:
                raise IntegrityError(f"fact {unit.ref_id} is not in the bank")
            facts.append(("fact", f"FACT {fact.id} [{fact.timestamp}]: {fact.content}"))
        else:
            raise IntegrityError(f"unknown level {unit.level!r}")
    return persona + scenes + facts


def assemble_context(retrieved: RetrievedSet, bank: MemoryBank, token_budget: int | None = DEFAULT_TOKEN_BUDGET) -> str:
    """Lay out retrieved memories as prompt text within a whitespace-token budget.

    Lines are kept in order until the next one would overflow the budget;
    everything after it is dropped and a marker line notes how many units
    were cut. Facts come last, so they are the first to go.
    """
    lines = context_lines(retrieved, bank)
    if token_budget is None:
        return "\n".join(line for _, line in lines)
    kept: list[str] = []
    used = 0
    for i, (_, line) in enumerate(lines):
        cost = _count_tokens(line)
        if used + cost > token_budget:
            kept.append(f"[{len(lines) - i} more memory units omitted: token budget {token_budget} reached]")
            break
        kept.append(line)
        used += cost
    return "\n".join(kept)


# ---------------------------------------------------------------------------
# metrics

_PUNCT = set(string.punctuation)
_ARTICLES = re.compile(r"\b(a|an|the)\b")


def _strip_punct(text: str) -> str:
    return "".join(ch for ch in text if ch not in _PUNCT)


def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation and articles, collapse whitespace."""
    return " ".join(_ARTICLES.sub(" ", _strip_punct(text.lower())).split())


def bleu_tokens(text: str) -> list[str]:
    # articles are kept here: BLEU counts every word
    return _strip_punct(text.lower()).split()


def token_f1(prediction: str, gold: str) -> float:
    pred = normalize_answer(prediction).split()
    ref = normalize_answer(gold).split()
    if not pred and not ref:
        return 1.0
    if not pred or not ref:
        return 0.0
    common = sum((Counter(pred) & Counter(ref)).values())
    if common == 0:
        return 0.0
    precision = common / len(pred)
    recall = common / len(ref)
    return 2 * precision * recall / (precision + recall)


def bleu1(prediction: str, gold: str) -> float:
    """Clipped unigram precision times the brevity penalty."""
    pred = bleu_tokens(prediction)
    ref = bleu_tokens(gold)
    if not pred:
        return 1.0 if not ref else 0.0
    if not ref:
        return 0.0
    clipped = sum((Counter(pred) & Counter(ref)).values())
    precision = clipped / len(pred)
    c, r = len(pred), len(ref)
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return precision * bp


# ---------------------------------------------------------------------------
# dataset loading


def _check_timestamp(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise DataError("timestamp must be an ISO-8601 string", path)
    try:
        datetime.fromisoformat(value[:-1] + "+00:00" if value.endswith("Z") else value)
    except ValueError:
        raise DataError(f"malformed timestamp {value!r}", path) from None
    return value


def _field(obj: Mapping, key: str, kind: type | tuple[type, ...], path: str) -> Any:
    if not isinstance(obj, Mapping):
        raise DataError("expected an object", path)
    if key not in obj:
        raise DataError(f"missing field '{key}'", path)
    value = obj[key]
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise DataError(f"field '{key}' must be {name}", f"{path}.{key}")
    return value


def parse_conversation(obj: Mapping, path: str = "$") -> Conversation:
    conv_id = str(_field(obj, "id", (str, int), path))
    raw_turns = _field(obj, "turns", list, path)
    if not raw_turns:
        raise DataError("conversation has no turns", f"{path}.turns")
    turns = []
    for i, t in enumerate(raw_turns):
        tp = f"{path}.turns[{i}]"
        turn = Turn(
            turn=_field(t, "turn", int, tp),
            speaker=_field(t, "speaker", str, tp),
            query=_field(t, "query", str, tp),
            response=_field(t, "response", str, tp),
            timestamp=_check_timestamp(_field(t, "timestamp", str, tp), f"{tp}.timestamp"),
        )
        if not turn.query.strip() and not turn.response.strip():
            raise DataError("turn has neither query nor response text", tp)
        if turns and turn.turn <= turns[-1].turn:
            raise DataError(f"turn ids must increase (got {turn.turn} after {turns[-1].turn})", f"{tp}.turn")
        turns.append(turn)
    return Conversation(conv_id, turns)


def parse_dataset(obj: Any) -> Dataset:
    if not isinstance(obj, Mapping):
        raise DataError("top level must be an object", "$")
    convs = [parse_conversation(c, f"$.conversations[{i}]") for i, c in enumerate(obj.get("conversations", []))]
    ids = [c.id for c in convs]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate conversation ids", "$.conversations")
    items: list[QAItem] = []
    skipped = 0
    for i, q in enumerate(obj.get("qa", [])):
        qp = f"$.qa[{i}]"
        category = _field(q, "category", str, qp)
        if category in SKIPPED_CATEGORIES:
            skipped += 1
            continue
        if category not in CATEGORIES:
            raise DataError(f"unknown category {category!r}", f"{qp}.category")
        evidence = q.get("evidence", [])
        if not isinstance(evidence, list) or not all(isinstance(e, int) and not isinstance(e, bool) for e in evidence):
            raise DataError("evidence must be a list of turn ids", f"{qp}.evidence")
        items.append(
            QAItem(
                question=_field(q, "question", str, qp),
                answer=str(_field(q, "answer", (str, int, float), qp)),
                category=category,
                conversation_id=str(_field(q, "conversation_id", (str, int), qp)),
                evidence=list(evidence),
            )
        )
    return Dataset(convs, items, skipped)


def load_dataset(path: str | Path) -> Dataset:
    """Read a conversations/QA JSON file. Adversarial items are skipped and counted."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", "$") from None
    return parse_dataset(obj)


def dataset_to_json(convs: Sequence[Conversation], items: Sequence[QAItem]) -> dict[str, Any]:
    return {
        "conversations": [{"id": c.id, "turns": [asdict(t) for t in c.turns]} for c in convs],
        "qa": [asdict(q) for q in items],
    }


# ---------------------------------------------------------------------------
# harness


@dataclass
class ItemResult:
    question: str
    category: str
    conversation_id: str
    gold: str
    answer: str
    retrieved: list[str]
    f1: float
    bleu1: float
    evidence_recall: float | None = None
    error: str | None = None


@dataclass
class EvalReport:
    items: list[ItemResult] = field(default_factory=list)
    strategy: str = "bimem"
    construction_seconds: float = 0.0
    answer_seconds_total: float = 0.0
    skipped: int = 0

    @staticmethod
    def _pct(values: Iterable[float]) -> float | None:
        vals = list(values)
        return round(100.0 * sum(vals) / len(vals), 2) if vals else None

    def summary(self) -> dict[str, Any]:
        per_cat = {}
        for cat in CATEGORIES:
            rows = [r for r in self.items if r.category == cat]
            per_cat[cat] = {
                "count": len(rows),
                "f1": self._pct(r.f1 for r in rows),
                "bleu1": self._pct(r.bleu1 for r in rows),
            }
        with_evidence = [r.evidence_recall for r in self.items if r.evidence_recall is not None]
        return {
            "averaging": "micro (mean over items)",
            "strategy": self.strategy,
            "count": len(self.items),
            "skipped": self.skipped,
            "errors": sum(1 for r in self.items if r.error),
            "categories": per_cat,
            "average": {"f1": self._pct(r.f1 for r in self.items), "bleu1": self._pct(r.bleu1 for r in self.items)},
            "evidence_recall": self._pct(with_evidence),
            "timing": {
                "construction_seconds": round(self.construction_seconds, 3),
                "answer_seconds_mean": round(self.answer_seconds_total / len(self.items), 3) if self.items else 0.0,
            },
        }

    def to_dict(self) -> dict[str, Any]:
        return {"summary": self.summary(), "items": [asdict(r) for r in self.items]}

    def to_table(self) -> str:
        s = self.summary()
        cols = [("Single Hop", "single_hop"), ("Multi-Hop", "multi_hop"), ("Open Domain", "open_domain"), ("Temporal", "temporal")]

        def fmt(v: float | None) -> str:
            return "-" if v is None else f"{v:.2f}"

        head = ["Method"] + [f"{name} {m}" for name, _ in cols for m in ("F1", "B1")] + ["Average F1", "Average B1"]
        row = [s["strategy"]]
        for _, key in cols:
            row += [fmt(s["categories"][key]["f1"]), fmt(s["categories"][key]["bleu1"])]
        row += [fmt(s["average"]["f1"]), fmt(s["average"]["bleu1"])]
        widths = [max(len(a), len(b)) for a, b in zip(head, row)]
        lines = [
            f"# {s['averaging']}; {s['count']} items, {s['skipped']} skipped",
            "  ".join(h.ljust(w) for h, w in zip(head, widths)),
            "  ".join(c.ljust(w) for c, w in zip(row, widths)),
        ]
        if s["evidence_recall"] is not None:
            lines.append(f"evidence recall: {s['evidence_recall']:.2f}")
        return "\n".join(lines)


def _turn_to_fact(bank: MemoryBank) -> dict[int, int]:
    return {f.source_turn: f.id for f in bank.facts.values() if f.source_turn is not None}


def evaluate_item(
    item: QAItem,
    retriever: Retriever,
    cfg: RetrievalConfig,
    backend: ChatBackend,
    token_budget: int | None = DEFAULT_TOKEN_BUDGET,
) -> ItemResult:
    bank = retriever.bank
    result = ItemResult(item.question, item.category, item.conversation_id, item.answer, "", [], 0.0, 0.0)
    try:
        retrieved = retriever.retrieve(item.question, cfg)
        result.retrieved = [f"{u.level}:{u.ref_id}" for u in retrieved]
        if item.evidence:
            turn_map = _turn_to_fact(bank)
            wanted = {turn_map[t] for t in item.evidence if t in turn_map}
            got = set(retrieved.fact_ids())
            result.evidence_recall = len(wanted & got) / len(item.evidence)
        context = assemble_context(retrieved, bank, token_budget)
        result.answer = operators.generate_answer(backend, item.question, context)
    except (BimemError, ValueError, LookupError) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
        return result
    result.f1 = token_f1(result.answer, item.answer)
    result.bleu1 = bleu1(result.answer, item.answer)
    return result


def run_eval(
    source: MemoryBank | Mapping[str, MemoryBank] | Conversation | Sequence[Conversation],
    items: Sequence[QAItem],
    cfg: RetrievalConfig | None = None,
    backend: ChatBackend | None = None,
    provider: EmbeddingProvider | None = None,
    *,
    use_presets: bool = True,
    construction: ConstructionConfig | None = None,
    token_budget: int | None = DEFAULT_TOKEN_BUDGET,
    max_workers: int = 1,
    skipped: int = 0,
) -> EvalReport:
    """Retrieve, answer and score every QA item.

    ``source`` is either built banks (one, or a mapping by conversation id) or
    conversations, which are constructed first and timed. With
    ``use_presets`` the per-category k replaces ``cfg.k``.
    """
    cfg = cfg or RetrievalConfig()
    backend = backend or operators.MockBackend()
    report = EvalReport(strategy=cfg.strategy, skipped=skipped)

    t0 = time.perf_counter()
    banks: dict[str, MemoryBank]
    if isinstance(source, MemoryBank):
        banks = {str(source.provenance.get("conversation_id", "")): source}
    elif isinstance(source, Conversation):
        banks = {source.id: construct_memory(source, construction, backend, provider)}
    elif isinstance(source, Mapping):
        banks = dict(source)
    else:
        banks = {c.id: construct_memory(c, construction, backend, provider) for c in source}
    report.construction_seconds = time.perf_counter() - t0 if not isinstance(source, (MemoryBank, Mapping)) else 0.0

    retrievers = {cid: Retriever(bank, provider, cfg) for cid, bank in banks.items()}
    jobs = []
    for item in items:
        if item.conversation_id in retrievers:
            retriever = retrievers[item.conversation_id]
        elif len(retrievers) == 1:
            retriever = next(iter(retrievers.values()))
        else:
            raise DataError(f"no memory bank for conversation {item.conversation_id!r}")
        item_cfg = cfg
        if use_presets:
            item_cfg = RetrievalConfig(
                k=PRESET_K[item.category], m=cfg.m, alpha=cfg.alpha, bm25_k1=cfg.bm25_k1,
                bm25_b=cfg.bm25_b, strategy=cfg.strategy, quotas=cfg.quotas,
            )
        jobs.append((item, retriever, item_cfg))

    t1 = time.perf_counter()
    if max_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            report.items = list(pool.map(lambda j: evaluate_item(j[0], j[1], j[2], backend, token_budget), jobs))
    else:
        report.items = [evaluate_item(item, r, c, backend, token_budget) for item, r, c in jobs]
    report.answer_seconds_total = time.perf_counter() - t1
    return report
