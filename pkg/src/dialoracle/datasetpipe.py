"""End-to-end split generation, serialization and statistics.

Generation is a pure function of (ontology, catalog, config): every block of
work derives its own rng stream from (seed, split, block index), and a
sequential combiner applies label balancing / cell quotas while assigning
final ids. Workers only parallelize block computation, so the output is
byte-identical for any --workers value.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, Mapping

from .catalog import Catalog, sample_context_items
from .contextgen import CASE_I, CASES, ReasoningContext, assemble_context
from .errors import DatasetError, GenerationError
from .ontology import Ontology
from .oracle import (Constraints, GoldOutput, InformItems, InformTF, NoAnswer,
                     SelectItems, derive_gold, emit_output, parse_output)
from .querygen import (ANSWERABLE, EXTRACT, INFORM_TF, NO_REASON_QUERY,
                       QueryGenSettings, QuerySemantics, enumerate_applicable_queries,
                       realize_surface, sample_query, with_spoken)

DATASET_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1

TASK_TF = "tf"
TASK_SEQ2SEQ = "seq2seq"

META_KEYS = ("task_format", "split", "case", "k", "num_attributes",
             "action_type", "answer_class", "spoken", "attributes_used")

# Table-6-style cells pinned in quota splits: (num attributes, answer class)
QUOTA_CELLS = ((1, ANSWERABLE), (1, EXTRACT), (2, ANSWERABLE), (2, EXTRACT))


@dataclass(frozen=True)
class Example:
    id: str
    input: str
    output: str
    meta: Mapping[str, object]


@dataclass(frozen=True)
class GenConfig:
    task_format: str  # tf | seq2seq
    sizes: Mapping[str, int]
    seed: int = 0
    k_max: int = 5
    k_policy: str = "uniform"  # uniform | fixed
    k_fixed: int | None = None
    case_policy: str = "random"  # training contexts: fixed | random (Cases I-III)
    case_fixed: str = CASE_I
    eval_case: str = CASE_I  # dev/test contexts carry no clues by default
    max_attributes: int = 2
    spoken_fraction: Mapping[str, float] | float = 0.0
    no_reason_fraction: Mapping[str, float] | float = 0.0
    test_cell_quotas: bool = False  # pin test cells to size/4 each

    @staticmethod
    def tf_default(seed: int = 0, sizes: Mapping[str, int] | None = None) -> "GenConfig":
        return GenConfig(
            task_format=TASK_TF,
            sizes=dict(sizes or {"train": 120_000, "dev": 5_000, "test": 25_000}),
            seed=seed, k_policy="fixed", k_fixed=5, case_policy="random",
        )

    @staticmethod
    def seq2seq_default(seed: int = 0, sizes: Mapping[str, int] | None = None) -> "GenConfig":
        return GenConfig(
            task_format=TASK_SEQ2SEQ,
            sizes=dict(sizes or {"train": 100_000, "dev": 5_000, "test": 20_000}),
            seed=seed, k_policy="uniform", case_policy="random",
            spoken_fraction={"train": 0.33, "dev": 0.33, "test": 0.4},
            no_reason_fraction={"train": 0.1, "dev": 0.1, "test": 0.0},
            test_cell_quotas=True,
        )

    def validate(self) -> None:
        if self.task_format not in (TASK_TF, TASK_SEQ2SEQ):
            raise GenerationError(f"unknown task format {self.task_format!r}")
        for split, size in self.sizes.items():
            if size < 0:
                raise GenerationError(f"negative size for split {split!r}")
        if self.k_policy == "fixed":
            if not self.k_fixed or not 1 <= self.k_fixed <= self.k_max:
                raise GenerationError(f"fixed k {self.k_fixed!r} outside 1..{self.k_max}")
        elif self.k_policy != "uniform":
            raise GenerationError(f"unknown k policy {self.k_policy!r}")
        if self.case_policy not in ("fixed", "random"):
            raise GenerationError(f"unknown case policy {self.case_policy!r}")
        if self.case_fixed not in CASES or self.eval_case not in CASES:
            raise GenerationError("cases must be one of I, II, III")
        for split in self.sizes:
            if not 0.0 <= self._fraction(self.spoken_fraction, split) <= 1.0:
                raise GenerationError("spoken fraction outside [0, 1]")
            frac = self._fraction(self.no_reason_fraction, split)
            if not 0.0 <= frac <= 1.0:
                raise GenerationError("no-reason fraction outside [0, 1]")
            if self.task_format == TASK_TF and frac:
                raise GenerationError("tf datasets are true/false only; "
                                      "no_reason_fraction must be 0")
        if self.max_attributes not in (1, 2):
            raise GenerationError("max_attributes must be 1 or 2")

    @staticmethod
    def _fraction(value, split: str) -> float:
        if isinstance(value, Mapping):
            return float(value.get(split, 0.0))
        return float(value)

    def spoken_for(self, split: str) -> float:
        return self._fraction(self.spoken_fraction, split)

    def no_reason_for(self, split: str) -> float:
        return self._fraction(self.no_reason_fraction, split)

    def case_for(self, split: str, rng: random.Random) -> str:
        if split != "train":
            return self.eval_case
        if self.case_policy == "fixed":
            return self.case_fixed
        return rng.choice(CASES)  # Case IV: random mix per example

    def k_for(self, rng: random.Random, minimum: int = 0) -> int:
        if self.k_policy == "fixed":
            return self.k_fixed
        return rng.randint(minimum, self.k_max)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sizes"] = dict(self.sizes)
        for key in ("spoken_fraction", "no_reason_fraction"):
            if isinstance(out[key], Mapping):
                out[key] = dict(out[key])
        return out

    def content_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")).hexdigest()


def _rng_for(seed: int, split: str, kind: str, index: int) -> random.Random:
    return random.Random(f"{seed}:{split}:{kind}:{index}")


def _action_type(gold: GoldOutput) -> str:
    if isinstance(gold, InformTF):
        return "inform_tf"
    if isinstance(gold, InformItems):
        return "inform"
    if isinstance(gold, SelectItems):
        return "select"
    if isinstance(gold, Constraints):
        return "constraint"
    return "no_answer"


def _answer_class(gold: GoldOutput) -> str:
    if isinstance(gold, Constraints):
        return EXTRACT
    if isinstance(gold, NoAnswer):
        return "no_answer"
    return ANSWERABLE


def _meta(cfg: GenConfig, split: str, ctx: ReasoningContext, q: QuerySemantics,
          gold: GoldOutput) -> dict:
    return {
        "task_format": cfg.task_format,
        "split": split,
        "case": ctx.case,
        "k": ctx.k,
        "num_attributes": len(q.predicates),
        "action_type": _action_type(gold),
        "answer_class": _answer_class(gold),
        "spoken": q.spoken,
        "attributes_used": sorted({p.attribute for p in q.predicates}),
    }


def _settings(cfg: GenConfig, catalog: Catalog,
              actions: frozenset[str] | None = None) -> QueryGenSettings:
    return QueryGenSettings(max_attributes=cfg.max_attributes,
                            token_pools=dict(catalog.token_pools),
                            actions=actions)


def _sample_context(onto: Ontology, catalog: Catalog, cfg: GenConfig, split: str,
                    rng: random.Random, k: int) -> ReasoningContext:
    items = sample_context_items(catalog, k, rng, onto)
    return assemble_context(items, cfg.case_for(split, rng), onto, rng)


# --- tf blocks: one context, all applicable true/false queries ---------------

_TF_ACTIONS = frozenset({INFORM_TF})


def _tf_block(onto: Ontology, catalog: Catalog, cfg: GenConfig, split: str,
              index: int) -> list[tuple[bool, str, dict]]:
    rng = _rng_for(cfg.seed, split, "tf", index)
    k = cfg.k_for(rng, minimum=1)
    ctx = _sample_context(onto, catalog, cfg, split, rng, k)
    semantics = enumerate_applicable_queries(
        ctx, onto, _settings(cfg, catalog, _TF_ACTIONS), rng)
    rng.shuffle(semantics)
    spoken_fraction = cfg.spoken_for(split)
    out = []
    for q in semantics:
        if spoken_fraction and rng.random() < spoken_fraction:
            q = with_spoken(q)
        gold = derive_gold(ctx, q)
        surface = realize_surface(q, onto, rng)
        out.append((gold.value, f"{surface}\n{ctx.full_text}",
                    _meta(cfg, split, ctx, q, gold)))
    return out


# --- seq2seq blocks: one example per index -----------------------------------

def _seq2seq_block(onto: Ontology, catalog: Catalog, cfg: GenConfig, split: str,
                   index: int, cell: tuple[int, str] | None) -> tuple[str, str, dict]:
    rng = _rng_for(cfg.seed, split, "s2s", index)
    settings = _settings(cfg, catalog)

    if cell is None and rng.random() < cfg.no_reason_for(split):
        ctx = _sample_context(onto, catalog, cfg, split, rng,
                              cfg.k_for(rng, minimum=0))
        q = NO_REASON_QUERY
        gold = derive_gold(ctx, q)
        return (emit_output(gold), f"{realize_surface(q, onto, rng)}\n{ctx.full_text}",
                _meta(cfg, split, ctx, q, gold))

    target_attrs = cell[0] if cell else None
    target_class = cell[1] if cell else None
    for _ in range(60):
        minimum = 1 if target_class == ANSWERABLE else 0
        ctx = _sample_context(onto, catalog, cfg, split, rng,
                              cfg.k_for(rng, minimum=minimum))
        q = sample_query(ctx, onto, rng, settings, target_class, target_attrs)
        if q is None:
            continue
        spoken_fraction = cfg.spoken_for(split)
        if spoken_fraction and rng.random() < spoken_fraction:
            q = with_spoken(q)
        gold = derive_gold(ctx, q)
        if target_class is not None and _answer_class(gold) != target_class:
            continue
        return (emit_output(gold), f"{realize_surface(q, onto, rng)}\n{ctx.full_text}",
                _meta(cfg, split, ctx, q, gold))
    raise GenerationError(
        f"could not draw a query for cell {cell!r} after 60 context attempts")


# --- worker plumbing ----------------------------------------------------------

_WORKER_STATE: dict = {}


def _init_worker(onto, catalog, cfg, split):
    _WORKER_STATE.update(onto=onto, catalog=catalog, cfg=cfg, split=split)


def _tf_block_worker(index: int):
    s = _WORKER_STATE
    return _tf_block(s["onto"], s["catalog"], s["cfg"], s["split"], index)


def _seq2seq_block_worker(args: tuple[int, tuple[int, str] | None]):
    index, cell = args
    s = _WORKER_STATE
    return _seq2seq_block(s["onto"], s["catalog"], s["cfg"], s["split"], index, cell)


def _windowed_map(fn, worker_fn, args_iter: Iterable, workers: int,
                  init_args: tuple):
    """Map preserving order; parallel workers never change the output."""
    if workers <= 1:
        for args in args_iter:
            yield fn(args)
        return
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=init_args) as pool:
        window = max(4, workers * 8)
        pending: deque = deque()
        iterator = iter(args_iter)
        try:
            for args in iterator:
                pending.append(pool.submit(worker_fn, args))
                if len(pending) >= window:
                    yield pending.popleft().result()
            while pending:
                yield pending.popleft().result()
        finally:
            for future in pending:
                future.cancel()


def _quota_cells(size: int) -> list[tuple[int, str]]:
    base, extra = divmod(size, len(QUOTA_CELLS))
    plan = []
    for i, cell in enumerate(QUOTA_CELLS):
        plan.extend([cell] * (base + (1 if i < extra else 0)))
    return plan


def generate_split(onto: Ontology, catalog: Catalog, cfg: GenConfig,
                   workers: int = 1) -> Iterator[Example]:
    """Yield the examples of one split, deterministically.

    tf: every applicable true/false query of each sampled context is
    attached, with acceptance capped per label so the split lands at a
    50/50 true rate. seq2seq: one sampled query per context; when the split
    has cell quotas (test), example index pins its (attributes, class) cell.
    """
    cfg.validate()
    split = catalog.split
    size = cfg.sizes.get(split, 0)
    if size == 0:
        return
    init_args = (onto, catalog, cfg, split)

    if cfg.task_format == TASK_TF:
        quota = {True: size - size // 2, False: size // 2}
        counts = {True: 0, False: 0}
        emitted = 0

        def blocks():
            index = 0
            while True:
                yield index
                index += 1

        for block in _windowed_map(
                lambda i: _tf_block(onto, catalog, cfg, split, i),
                _tf_block_worker, blocks(), workers, init_args):
            for label, text, meta in block:
                if counts[label] >= quota[label]:
                    continue
                counts[label] += 1
                yield Example(id=f"{split}-{emitted:07d}", input=text,
                              output="true" if label else "false", meta=meta)
                emitted += 1
                if emitted >= size:
                    return
        return

    use_quotas = cfg.test_cell_quotas and split == "test"
    cells: list[tuple[int, str] | None]
    cells = _quota_cells(size) if use_quotas else [None] * size
    args = ((i, cell) for i, cell in enumerate(cells))
    emitted = 0
    for output, text, meta in _windowed_map(
            lambda a: _seq2seq_block(onto, catalog, cfg, split, a[0], a[1]),
            _seq2seq_block_worker, args, workers, init_args):
        yield Example(id=f"{split}-{emitted:07d}", input=text, output=output,
                      meta=meta)
        emitted += 1


# --- serialization -------------------------------------------------------------

def write_dataset(stream: Iterable[Example], path: str) -> dict:
    """Write one JSON record per example; returns {path, count, content_hash}."""
    digest = hashlib.sha256()
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for example in stream:
            record = {
                "schema_version": DATASET_SCHEMA_VERSION,
                "id": example.id,
                "input": example.input,
                "output": example.output,
                "meta": dict(example.meta),
            }
            line = json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n"
            fh.write(line)
            digest.update(line.encode("utf-8"))
            count += 1
    return {"path": path, "count": count, "content_hash": digest.hexdigest()}


def read_dataset(path: str, validate_outputs: bool = True) -> Iterator[Example]:
    """Yield validated examples; malformed lines raise with their number."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"not valid JSON: {exc}", lineno) from None
            if not isinstance(record, dict):
                raise DatasetError("record is not an object", lineno)
            version = record.get("schema_version")
            if version != DATASET_SCHEMA_VERSION:
                raise DatasetError(
                    f"unsupported schema_version {version!r} "
                    f"(expected {DATASET_SCHEMA_VERSION})", lineno)
            try:
                example = Example(id=record["id"], input=record["input"],
                                  output=record["output"], meta=record["meta"])
            except KeyError as exc:
                raise DatasetError(f"missing field {exc}", lineno) from None
            missing = [k for k in META_KEYS if k not in example.meta]
            if missing:
                raise DatasetError(f"missing metadata {missing}", lineno)
            if validate_outputs:
                if example.meta["task_format"] == TASK_TF:
                    if example.output not in ("true", "false"):
                        raise DatasetError(
                            f"tf output {example.output!r} not true/false", lineno)
                else:
                    parse_output(example.output)  # raises outside the grammar
            yield example


@dataclass
class StatsReport:
    total: int = 0
    by_action: Counter = field(default_factory=Counter)
    by_case: Counter = field(default_factory=Counter)
    by_slice: Counter = field(default_factory=Counter)  # (class, k, attrs)
    by_cell: Counter = field(default_factory=Counter)   # (attrs, class)
    spoken: int = 0
    true_labels: int = 0
    tf_total: int = 0
    duplicate_inputs: int = 0

    @property
    def tf_true_rate(self) -> float | None:
        return self.true_labels / self.tf_total if self.tf_total else None

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "by_action": dict(self.by_action),
            "by_case": dict(self.by_case),
            "by_slice": {"|".join(map(str, k)): v for k, v in sorted(self.by_slice.items())},
            "by_cell": {"|".join(map(str, k)): v for k, v in sorted(self.by_cell.items())},
            "spoken": self.spoken,
            "tf_true_rate": self.tf_true_rate,
            "duplicate_inputs": self.duplicate_inputs,
        }

    def to_text(self) -> str:
        lines = [f"examples: {self.total}"]
        if self.tf_total:
            lines.append(f"tf true rate: {self.tf_true_rate:.4f}")
        lines.append(f"spoken inputs: {self.spoken}")
        lines.append(f"duplicate inputs: {self.duplicate_inputs}")
        lines.append("action types: " + ", ".join(
            f"{k}={v}" for k, v in sorted(self.by_action.items())))
        lines.append("cases: " + ", ".join(
            f"{k}={v}" for k, v in sorted(self.by_case.items())))
        lines.append("cells (attrs x class): " + ", ".join(
            f"{a}x{c}={v}" for (a, c), v in sorted(self.by_cell.items())))
        return "\n".join(lines)


def compute_stats(path: str) -> StatsReport:
    """Single-pass slice counts, tf balance and duplicate-input detection."""
    report = StatsReport()
    seen: set[bytes] = set()
    for example in read_dataset(path, validate_outputs=False):
        report.total += 1
        meta = example.meta
        report.by_action[meta["action_type"]] += 1
        report.by_case[meta["case"]] += 1
        report.by_slice[(meta["answer_class"], meta["k"], meta["num_attributes"])] += 1
        report.by_cell[(meta["num_attributes"], meta["answer_class"])] += 1
        if meta["spoken"]:
            report.spoken += 1
        if meta["task_format"] == TASK_TF:
            report.tf_total += 1
            if example.output == "true":
                report.true_labels += 1
        key = hashlib.sha1(example.input.encode("utf-8")).digest()
        if key in seen:
            report.duplicate_inputs += 1
        else:
            seen.add(key)
    return report
