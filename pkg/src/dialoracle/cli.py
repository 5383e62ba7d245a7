"""Command-line entry point: generation, statistics, scoring, single-query
answering, dataset self-checks and an interactive playground.

Every subcommand is a thin wrapper over the library; all randomness flows
from --seed. Exit codes: 0 success, 1 runtime error, 2 usage/validation
error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from . import __version__
from .catalog import build_split_catalogs, sample_context_items
from .contextgen import CASES, assemble_context, parse_context
from .datasetpipe import (MANIFEST_SCHEMA_VERSION, GenConfig, compute_stats,
                          generate_split, write_dataset)
from .errors import DialOracleError
from .evalharness import oracle_selfcheck, score_exact_match
from .ontology import Ontology, default_ontology, load_ontology_path, validate_ontology
from .oracle import derive_gold, emit_output
from .querygen import parse_query

CONFIG_ENV_VAR = "DIALORACLE_CONFIG"


def _load_config(path: str | None) -> Ontology:
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return load_ontology_path(path)
    return default_ontology()


def _parse_sizes(text: str) -> dict[str, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError("sizes must be three comma-separated counts")
    return {"train": int(parts[0]), "dev": int(parts[1]), "test": int(parts[2])}


def _build_gen_config(args) -> GenConfig:
    if args.format == "tf":
        cfg = GenConfig.tf_default(seed=args.seed)
    else:
        cfg = GenConfig.seq2seq_default(seed=args.seed)
    overrides: dict = {}
    if args.sizes:
        overrides["sizes"] = _parse_sizes(args.sizes)
    if args.k_max is not None:
        overrides["k_max"] = args.k_max
    if args.k is not None:
        overrides["k_policy"] = "fixed"
        overrides["k_fixed"] = args.k
    elif args.k_policy:
        overrides["k_policy"] = args.k_policy
        if args.k_policy == "fixed":
            overrides["k_fixed"] = cfg.k_fixed or cfg.k_max
    if args.case:
        if args.case == "IV":
            overrides["case_policy"] = "random"
        else:
            overrides["case_policy"] = "fixed"
            overrides["case_fixed"] = args.case
    if args.spoken_fraction is not None:
        overrides["spoken_fraction"] = args.spoken_fraction
    if args.no_reason_fraction is not None:
        overrides["no_reason_fraction"] = args.no_reason_fraction
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    return cfg


def cmd_generate(args) -> int:
    onto = _load_config(args.config)
    diagnostics = [d for d in validate_ontology(onto) if d.severity == "error"]
    if diagnostics:
        for diag in diagnostics:
            print(f"config error at {diag.path}: {diag.message}", file=sys.stderr)
        return 2
    try:
        cfg = _build_gen_config(args)
        cfg.validate()
        catalog_sizes = _parse_sizes(args.catalog_sizes)
    except (ValueError, DialOracleError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        catalogs = build_split_catalogs(onto, catalog_sizes, seed=cfg.seed)
    except DialOracleError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "generator": f"dialoracle {__version__}",
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "config_hash": cfg.content_hash(),
        "catalog_sizes": catalog_sizes,
        "catalog_fingerprints": {s: c.name_pool_fingerprint
                                 for s, c in catalogs.items()},
        "splits": {},
    }
    for split in ("train", "dev", "test"):
        path = out_dir / f"{split}.jsonl"
        info = write_dataset(
            generate_split(onto, catalogs[split], cfg, workers=args.workers),
            str(path))
        manifest["splits"][split] = {
            "file": path.name,
            "count": info["count"],
            "content_hash": info["content_hash"],
        }
        stats = compute_stats(str(path))
        print(f"--- {split} ({info['count']} examples) -> {path}")
        print(stats.to_text())
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    print(f"manifest -> {manifest_path}")
    return 0


def cmd_stats(args) -> int:
    report = compute_stats(args.data)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(report.to_text())
    return 0


def cmd_score(args) -> int:
    report = score_exact_match(args.data, args.predictions,
                               mismatch_limit=args.mismatches,
                               workers=args.workers)
    print(report.to_text())
    if args.json:
        Path(args.json).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    return 0


def cmd_selfcheck(args) -> int:
    onto = _load_config(args.config)
    report = oracle_selfcheck(args.data, onto, mismatch_limit=args.mismatches)
    print(report.to_text())
    if report.exact_match < 1.0:
        print("selfcheck FAILED: stored gold diverges from the oracle",
              file=sys.stderr)
        return 1
    return 0


def _load_context_items(args, onto):
    records = None
    if args.items:
        records = json.loads(args.items)
    elif args.context_file:
        text = Path(args.context_file).read_text(encoding="utf-8").strip()
        if text.startswith("["):
            records = json.loads(text)
        else:
            records = [json.loads(line) for line in text.splitlines() if line.strip()]
    if records is None:
        return None
    from .catalog import Item
    items = []
    for record in records:
        items.append(Item(name=record["name"], item_type=record["type"],
                          values=record["values"]))
    return items


def cmd_answer(args) -> int:
    onto = _load_config(args.config)
    items = _load_context_items(args, onto)
    if items is not None:
        ctx = assemble_context(items, "I", onto, random.Random(args.seed))
    elif args.context_text is not None:
        ctx = parse_context(args.context_text, onto)
    else:
        print("provide a context: --items, --context-file or --context-text",
              file=sys.stderr)
        return 2
    q = parse_query(args.query, onto)
    trace: list[str] = []
    gold = derive_gold(ctx, q, trace=trace)
    if args.trace:
        print(f"# parsed: {q}")
        for line in trace:
            print(f"# {line}")
    print(emit_output(gold))
    return 0


REPL_HELP = """commands:
  :new k=N [case=I|II|III]   sample a fresh context (N items)
  :show                      print the current context statements
  :trace                     toggle explanation traces
  :help                      this message
  :quit                      leave
anything else is answered as a user query over the current context."""


def cmd_repl(args) -> int:
    onto = _load_config(args.config)
    catalogs = build_split_catalogs(onto, (240, 60, 60), seed=args.seed)
    rng = random.Random(args.seed)
    ctx = assemble_context(
        sample_context_items(catalogs["train"], 3, rng, onto), "I", onto, rng)
    trace_on = False
    print(f"dialoracle {__version__} playground; :help for commands")
    _repl_show(ctx)
    while True:
        try:
            line = input("> ").strip()
        except EOFError:
            return 0
        if not line:
            continue
        if line.startswith(":"):
            parts = line.split()
            command = parts[0]
            if command in (":quit", ":q", ":exit"):
                return 0
            if command == ":help":
                print(REPL_HELP)
            elif command == ":show":
                _repl_show(ctx)
            elif command == ":trace":
                trace_on = not trace_on
                print(f"trace {'on' if trace_on else 'off'}")
            elif command == ":new":
                k, case = 3, "I"
                try:
                    for part in parts[1:]:
                        key, _, value = part.partition("=")
                        if key == "k":
                            k = int(value)
                        elif key == "case":
                            if value not in CASES:
                                raise ValueError(f"case must be one of {CASES}")
                            case = value
                        else:
                            raise ValueError(f"unknown option {key!r}")
                    ctx = assemble_context(
                        sample_context_items(catalogs["train"], k, rng, onto),
                        case, onto, rng)
                except (ValueError, DialOracleError) as exc:
                    print(f"cannot sample: {exc}")
                    continue
                _repl_show(ctx)
            else:
                print(f"unknown command {command!r}; :help for commands")
            continue
        q = parse_query(line, onto)
        trace: list[str] = []
        try:
            gold = derive_gold(ctx, q, trace=trace)
        except DialOracleError as exc:
            print(f"cannot answer: {exc}")
            continue
        if trace_on:
            print(f"# parsed: {q}")
            for note in trace:
                print(f"# {note}")
        print(emit_output(gold))


def _repl_show(ctx) -> None:
    if not ctx.items:
        print("(empty context)")
    for statement in ctx.statements:
        print(f"  {statement.text}")
    if ctx.ordinal_names:
        ordinals = ", ".join(f"{i + 1}={name}"
                             for i, name in enumerate(ctx.ordinal_names))
        print(f"  [ordinals: {ordinals}]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialoracle",
        description="Deterministic reasoning-episode generator, symbolic "
                    "oracle and exact-match harness for task-oriented dialogue.")
    parser.add_argument("--version", action="version",
                        version=f"dialoracle {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common_config = argparse.ArgumentParser(add_help=False)
    common_config.add_argument(
        "--config", default=None,
        help=f"ontology config path (default: ${CONFIG_ENV_VAR} or the "
             f"packaged shopping ontology)")

    p = sub.add_parser("generate", parents=[common_config],
                       help="generate train/dev/test splits plus a manifest")
    p.add_argument("--format", choices=("tf", "seq2seq"), required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sizes", default=None,
                   help="train,dev,test example counts (default: paper scale)")
    p.add_argument("--catalog-sizes", default="3000,600,1200",
                   help="train,dev,test catalog item counts")
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="fixed items per context")
    p.add_argument("--k-policy", choices=("uniform", "fixed"), default=None)
    p.add_argument("--case", choices=("I", "II", "III", "IV"), default=None,
                   help="training contexts: fixed case or IV for a random mix")
    p.add_argument("--spoken-fraction", type=float, default=None)
    p.add_argument("--no-reason-fraction", type=float, default=None)
    p.add_argument("--workers", type=int, default=1,
                   help="parallel generation workers (output is identical for any N)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="per-slice statistics of a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("score", help="exact-match score a predictions file")
    p.add_argument("--data", required=True, help="gold dataset file")
    p.add_argument("--predictions", required=True,
                   help="JSONL file of {id, prediction} records")
    p.add_argument("--json", default=None, help="also write a JSON report here")
    p.add_argument("--mismatches", type=int, default=20,
                   help="how many mismatches to list")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel scoring workers (report is identical for any N)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("selfcheck", parents=[common_config],
                       help="re-derive gold for every stored example (EM must be 1.0)")
    p.add_argument("--data", required=True)
    p.add_argument("--mismatches", type=int, default=20)
    p.set_defaults(func=cmd_selfcheck)

    p = sub.add_parser("answer", parents=[common_config],
                       help="answer one query over a supplied context")
    p.add_argument("--query", required=True)
    p.add_argument("--items", default=None,
                   help='inline JSON items: [{"name":..,"type":..,"values":{..}}]')
    p.add_argument("--context-file", default=None,
                   help="JSON/JSONL file of item records")
    p.add_argument("--context-text", default=None,
                   help="already-rendered context statements")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", action="store_true",
                   help="explain which rule fired and which items matched")
    p.set_defaults(func=cmd_answer)

    p = sub.add_parser("repl", parents=[common_config],
                       help="interactive playground against sampled contexts")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_repl)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DialOracleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
