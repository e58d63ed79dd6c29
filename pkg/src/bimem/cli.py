"""Command-line interface: build, query, eval, inspect."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import operators
from .construction import ConstructionConfig, construct_memory
from .errors import BackendError, BimemError, ConfigError, DataError, StageError
from .evaluation import assemble_context, load_dataset, parse_dataset, run_eval
from .graph import FactGraph, connected_components
from .model import PERSONA_KEYS, scene_text
from .retrieval import PRESET_K, STRATEGIES, Retriever, RetrievalConfig
from .store import atomic_write_text, load_bank, loads_bank, save_bank

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; usage errors are 1 here
        raise UsageError(f"{self.prog}: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bimem", description="Hierarchical fact/scene/persona memory for long conversations.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    b = sub.add_parser("build", help="construct a memory bank from a conversation file")
    b.add_argument("conversation", help="conversation JSON file")
    b.add_argument("-o", "--output", required=True, help="bank file to write")
    b.add_argument("--backend", choices=["mock", "remote"], default="mock")
    b.add_argument("--embedder", choices=["hash", "remote"], default="hash")
    b.add_argument("--dim", type=int, default=256, help="hash embedder dimension")
    b.add_argument("--keep-stopwords", action="store_true", help="hash embedder: embed function words too")
    b.add_argument("--tau", type=float, default=0.2)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--conversation-id", help="which conversation to build when the file holds several")

    q = sub.add_parser("query", help="retrieve memories and answer a question")
    q.add_argument("bank")
    q.add_argument("question")
    _retrieval_args(q)
    q.add_argument("--preset", choices=sorted(PRESET_K), help="use the tuned k for this question type")
    q.add_argument("--json", action="store_true", help="print machine-readable output")

    e = sub.add_parser("eval", help="answer and score a QA file")
    e.add_argument("source", help="bank JSON or conversation JSON")
    e.add_argument("qa", help="QA JSON file")
    e.add_argument("-o", "--output", required=True, help="report JSON to write")
    _retrieval_args(e)
    e.add_argument("--tau", type=float, default=0.2)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--embedder", choices=["hash", "remote"], default="hash")
    e.add_argument("--dim", type=int, default=256)
    e.add_argument("--keep-stopwords", action="store_true")

    i = sub.add_parser("inspect", help="print structure statistics for a bank")
    i.add_argument("bank")
    g = i.add_mutually_exclusive_group()
    g.add_argument("--scenes", action="store_true")
    g.add_argument("--persona", action="store_true")
    g.add_argument("--graph", action="store_true")
    return p


def _retrieval_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, help="initial search size (default: per-category preset, else 30)")
    p.add_argument("--m", type=int, default=3, help="facts recalled per activated scene")
    p.add_argument("--alpha", type=float, default=0.5, help="dense weight in the dense/BM25 mix")
    p.add_argument("--strategy", choices=STRATEGIES, default="bimem")
    p.add_argument("--backend", choices=["mock", "remote"], default="mock")


def _retrieval_config(args, k_default: int = 30) -> RetrievalConfig:
    k = args.k if args.k is not None else k_default
    return RetrievalConfig(k=k, m=args.m, alpha=args.alpha, strategy=args.strategy)


def _cmd_build(args) -> int:
    data = load_dataset(args.conversation)
    convs = data.conversations
    if not convs:
        raise DataError("file contains no conversations", "$.conversations")
    if args.conversation_id is not None:
        convs = [c for c in convs if c.id == args.conversation_id]
        if not convs:
            raise DataError(f"no conversation with id {args.conversation_id!r}")
    elif len(convs) > 1:
        raise UsageError(f"file holds {len(convs)} conversations; pick one with --conversation-id")
    cfg = ConstructionConfig(
        tau=args.tau, seed=args.seed, embedder=args.embedder, embed_dim=args.dim,
        stopwords=not args.keep_stopwords, backend=args.backend,
    )
    bank = construct_memory(convs[0], cfg)
    save_bank(bank, args.output)
    print(f"wrote {args.output}: {len(bank.facts)} facts, {len(bank.scenes)} scenes, 5 persona dimensions")
    return EXIT_OK


def _cmd_query(args) -> int:
    bank = load_bank(args.bank)
    k_default = PRESET_K[args.preset] if args.preset else 30
    cfg = _retrieval_config(args, k_default)
    retriever = Retriever(bank, cfg=cfg)
    retrieved = retriever.retrieve(args.question, cfg)
    backend = operators.make_backend(args.backend)
    context = assemble_context(retrieved, bank)
    answer = operators.generate_answer(backend, args.question, context)
    if args.json:
        out = {
            "question": args.question,
            "retrieved": [{"level": u.level, "id": u.ref_id, "score": u.score, "origin": u.origin} for u in retrieved],
            "answer": answer,
        }
        print(json.dumps(out, indent=2))
    else:
        for u in retrieved:
            print(f"{u.origin:18s} {u.level:7s} {str(u.ref_id):14s} {u.score:.4f}")
        print(f"\nanswer: {answer}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    raw = Path(args.source).read_text(encoding="utf-8") if Path(args.source).exists() else None
    if raw is None:
        raise DataError(f"cannot read {args.source}")
    try:
        head = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", "$") from None
    qa = load_dataset(args.qa)
    cfg = _retrieval_config(args)
    backend = operators.make_backend(args.backend)
    construction = ConstructionConfig(
        tau=args.tau, seed=args.seed, embedder=args.embedder, embed_dim=args.dim,
        stopwords=not args.keep_stopwords, backend=args.backend,
    )
    if isinstance(head, dict) and "format_version" in head:
        source = loads_bank(raw)
    else:
        source = parse_dataset(head).conversations
        if not source:
            raise DataError("source holds neither a bank nor conversations")
    report = run_eval(
        source, qa.qa, cfg, backend, use_presets=args.k is None, construction=construction, skipped=qa.skipped
    )
    atomic_write_text(args.output, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    print(report.to_table())
    return EXIT_OK


def _cmd_inspect(args) -> int:
    bank = load_bank(args.bank)
    if args.persona:
        for key in PERSONA_KEYS:
            print(f"{key}: {bank.persona.text(key)}")
        return EXIT_OK
    if args.scenes:
        for sid in sorted(bank.scenes):
            s = bank.scenes[sid]
            mark = " [calibrated]" if s.delta else ""
            print(f"scene {sid} ({len(s.members)} facts: {sorted(s.members)}){mark}")
            print(f"  {scene_text(s)}")
        return EXIT_OK
    graph = FactGraph.from_edges(sorted(bank.facts), ((f.id, e) for f in bank.facts.values() for e in f.edges))
    if args.graph:
        degrees = sorted((len(graph.adjacency[n]) for n in graph.node_ids), reverse=True)
        comps = connected_components(graph)
        print(f"nodes: {len(graph.node_ids)}  edges: {len(graph.edges())}  components: {len(comps)}")
        print(f"max degree: {degrees[0] if degrees else 0}  isolated: {sum(1 for d in degrees if d == 0)}")
        for a, b in sorted(graph.edges()):
            print(f"  {a} -- {b}")
        return EXIT_OK
    sizes = sorted((len(s.members) for s in bank.scenes.values()), reverse=True)
    calibrated = sum(1 for s in bank.scenes.values() if s.delta)
    prov = bank.provenance
    print(f"dimension: {bank.dimension}")
    print(f"facts: {len(bank.facts)}  edges: {len(graph.edges())}")
    print(f"scenes: {len(bank.scenes)}  calibrated: {calibrated}  largest: {sizes[0] if sizes else 0}  singletons: {sizes.count(1)}")
    print(f"embedder: {prov.get('embedder')}  backend: {prov.get('backend')}  tau: {prov.get('tau')}")
    for w in prov.get("warnings", []):
        print(f"warning: {w}")
    return EXIT_OK


COMMANDS = {"build": _cmd_build, "query": _cmd_query, "eval": _cmd_eval, "inspect": _cmd_inspect}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except StageError as exc:
        code = EXIT_BACKEND if isinstance(exc.cause, BackendError) else EXIT_DATA
        print(f"error: {exc}", file=sys.stderr)
        return code
    except (DataError, BimemError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
