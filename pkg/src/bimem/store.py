"""Versioned JSON persistence for memory banks."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any

from .errors import DataError
from .model import FactUnit, MemoryBank, PersonaDimension, PersonaProfile, SceneUnit, validate_bank

FORMAT_VERSION = 1


def bank_to_dict(bank: MemoryBank) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "dimension": bank.dimension,
        "facts": [
            {
                "id": f.id,
                "content": f.content,
                "timestamp": f.timestamp,
                "keywords": list(f.keywords),
                "tags": list(f.tags),
                "edges": sorted(f.edges),
                "source_turn": f.source_turn,
                "embedding": list(f.embedding),
            }
            for f in sorted(bank.facts.values(), key=lambda f: f.id)
        ],
        "scenes": [
            {
                "id": s.id,
                "summary": s.summary,
                "delta": s.delta,
                "keywords": list(s.keywords),
                "tags": list(s.tags),
                "members": sorted(s.members),
                "embedding": list(s.embedding),
            }
            for s in sorted(bank.scenes.values(), key=lambda s: s.id)
        ],
        "persona": {
            key: {"text": dim.text, "embedding": list(dim.embedding)}
            for key, dim in bank.persona.dimensions.items()
        },
        "provenance": bank.provenance,
    }


def dumps_bank(bank: MemoryBank) -> str:
    # floats go through repr(), which is the shortest exact round-trip form
    return json.dumps(bank_to_dict(bank), sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False) + "\n"


def _get(obj: Any, key: str, kind: type | tuple[type, ...], path: str) -> Any:
    if not isinstance(obj, dict):
        raise DataError("expected an object", path)
    if key not in obj:
        raise DataError(f"missing field '{key}'", path)
    value = obj[key]
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise DataError(f"field '{key}' has the wrong type", f"{path}.{key}")
    return value


def _vector(raw: Any, path: str) -> tuple[float, ...]:
    if not isinstance(raw, list):
        raise DataError("embedding must be a number array", path)
    out = []
    for i, x in enumerate(raw):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise DataError("embedding entries must be finite numbers", f"{path}[{i}]")
        out.append(float(x))
    return tuple(out)


def _str_list(raw: Any, path: str) -> list[str]:
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise DataError("expected a list of strings", path)
    return list(raw)


def _int_list(raw: Any, path: str) -> list[int]:
    if not isinstance(raw, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in raw):
        raise DataError("expected a list of integers", path)
    return list(raw)


def bank_from_dict(obj: Any) -> MemoryBank:
    version = _get(obj, "format_version", int, "$")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported format_version {version} (this build reads {FORMAT_VERSION})", "$.format_version")
    facts: dict[int, FactUnit] = {}
    for i, f in enumerate(_get(obj, "facts", list, "$")):
        p = f"$.facts[{i}]"
        fid = _get(f, "id", int, p)
        if fid in facts:
            raise DataError(f"duplicate fact id {fid}", f"{p}.id")
        source_turn = f.get("source_turn")
        if source_turn is not None and (not isinstance(source_turn, int) or isinstance(source_turn, bool)):
            raise DataError("source_turn must be an integer or null", f"{p}.source_turn")
        facts[fid] = FactUnit(
            id=fid,
            content=_get(f, "content", str, p),
            timestamp=_get(f, "timestamp", str, p),
            embedding=_vector(f.get("embedding"), f"{p}.embedding"),
            keywords=_str_list(f.get("keywords", []), f"{p}.keywords"),
            tags=_str_list(f.get("tags", []), f"{p}.tags"),
            edges=set(_int_list(f.get("edges", []), f"{p}.edges")),
            source_turn=source_turn,
        )
    scenes: dict[int, SceneUnit] = {}
    for i, s in enumerate(_get(obj, "scenes", list, "$")):
        p = f"$.scenes[{i}]"
        sid = _get(s, "id", int, p)
        if sid in scenes:
            raise DataError(f"duplicate scene id {sid}", f"{p}.id")
        delta = s.get("delta")
        if delta is not None and not isinstance(delta, str):
            raise DataError("delta must be a string or null", f"{p}.delta")
        scenes[sid] = SceneUnit(
            id=sid,
            summary=_get(s, "summary", str, p),
            members=set(_int_list(s.get("members"), f"{p}.members")),
            embedding=_vector(s.get("embedding"), f"{p}.embedding"),
            keywords=_str_list(s.get("keywords", []), f"{p}.keywords"),
            tags=_str_list(s.get("tags", []), f"{p}.tags"),
            delta=delta,
        )
    raw_persona = _get(obj, "persona", dict, "$")
    dims = {}
    for key, entry in raw_persona.items():
        p = f"$.persona.{key}"
        dims[key] = PersonaDimension(_get(entry, "text", str, p), _vector(entry.get("embedding") if isinstance(entry, dict) else None, f"{p}.embedding"))
    provenance = obj.get("provenance", {})
    if not isinstance(provenance, dict):
        raise DataError("provenance must be an object", "$.provenance")
    return MemoryBank(
        dimension=_get(obj, "dimension", int, "$"),
        facts=facts,
        scenes=scenes,
        persona=PersonaProfile(dims),
        provenance=provenance,
    )


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, fsync, then rename over ``path``."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=str(target.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def save_bank(bank: MemoryBank, path: str | Path) -> None:
    """Validate, then write canonical JSON atomically. Invalid banks are refused."""
    problems = validate_bank(bank)
    if problems:
        raise DataError("refusing to save an invalid bank: " + "; ".join(problems))
    atomic_write_text(path, dumps_bank(bank))


def loads_bank(text: str) -> MemoryBank:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg} (offset {exc.pos})", "$") from None
    bank = bank_from_dict(obj)
    problems = validate_bank(bank)
    if problems:
        raise DataError("bank failed validation: " + "; ".join(problems), "$")
    return bank


def load_bank(path: str | Path) -> MemoryBank:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    return loads_bank(text)
