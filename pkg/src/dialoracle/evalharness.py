"""Exact-match scoring of prediction files and oracle self-checks.

Normalization is deliberately minimal (case + whitespace): constraint order
and numeral spelling stay significant, so model trainers must emit the
canonical grammar exactly.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .contextgen import parse_context
from .datasetpipe import TASK_TF, read_dataset
from .errors import DatasetError, PredictionError
from .ontology import Ontology
from .oracle import InformTF, derive_gold, emit_output
from .querygen import parse_query

NORMALIZATION = "v1: lowercase, collapse whitespace runs, strip"


def normalize(s: str) -> str:
    """EM comparison form: lowercase, single spaces, no padding."""
    return " ".join(s.split()).lower()


SliceKey = tuple[str, int, int, bool]  # action type, k, attributes, spoken


@dataclass
class EvalReport:
    total: int = 0
    matches: int = 0
    slice_counts: Counter = field(default_factory=Counter)
    slice_matches: Counter = field(default_factory=Counter)
    mismatches: list[tuple[str, str, str]] = field(default_factory=list)  # id, gold, prediction
    normalization: str = NORMALIZATION

    @property
    def exact_match(self) -> float:
        return self.matches / self.total if self.total else 0.0

    def slice_em(self, key: SliceKey) -> float:
        count = self.slice_counts[key]
        return self.slice_matches[key] / count if count else 0.0

    def record(self, key: SliceKey, matched: bool) -> None:
        self.total += 1
        self.slice_counts[key] += 1
        if matched:
            self.matches += 1
            self.slice_matches[key] += 1

    def to_dict(self) -> dict:
        return {
            "exact_match": self.exact_match,
            "total": self.total,
            "matches": self.matches,
            "normalization": self.normalization,
            "slices": [
                {"action_type": a, "k": k, "num_attributes": n, "spoken": sp,
                 "count": self.slice_counts[(a, k, n, sp)],
                 "matches": self.slice_matches[(a, k, n, sp)],
                 "exact_match": self.slice_em((a, k, n, sp))}
                for (a, k, n, sp) in sorted(self.slice_counts)
            ],
            "mismatches": [
                {"id": i, "gold": g, "prediction": p} for i, g, p in self.mismatches
            ],
        }

    def to_text(self) -> str:
        lines = [
            f"exact match: {self.exact_match:.4f} ({self.matches}/{self.total})",
            f"normalization: {self.normalization}",
        ]
        # Inform/Select vs Extract columns over (attributes, k) rows
        table: dict[tuple[int, int], dict[str, list[int]]] = {}
        for (action, k, n, _spoken), count in self.slice_counts.items():
            col = "extract" if action == "constraint" else (
                "no_answer" if action == "no_answer" else "inform_select")
            cell = table.setdefault((n, k), {}).setdefault(col, [0, 0])
            cell[0] += count
            cell[1] += self.slice_matches[(action, k, n, _spoken)]
        if table:
            lines.append("attrs  k   inform/select       extract")
            for (n, k) in sorted(table):
                row = table[(n, k)]
                cells = []
                for col in ("inform_select", "extract"):
                    if col in row:
                        cnt, hit = row[col]
                        cells.append(f"{hit / cnt:7.4f} ({cnt:>6})")
                    else:
                        cells.append("      --        ")
                lines.append(f"{n:>5}  {k:<3} {cells[0]}  {cells[1]}")
        if self.mismatches:
            lines.append(f"first {len(self.mismatches)} mismatches:")
            for ex_id, gold, pred in self.mismatches:
                lines.append(f"  {ex_id}: gold={gold!r} prediction={pred!r}")
        return "\n".join(lines)


def _slice_key(meta: Mapping) -> SliceKey:
    return (meta["action_type"], meta["k"], meta["num_attributes"],
            bool(meta["spoken"]))


def read_predictions(path: str) -> dict[str, str]:
    """Load {id, prediction} records; duplicate ids fail closed."""
    out: dict[str, str] = {}
    duplicates: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                ex_id, text = record["id"], record["prediction"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise PredictionError(f"line {lineno}: bad prediction record ({exc})") from None
            if ex_id in out:
                duplicates.append(ex_id)
            out[ex_id] = text
    if duplicates:
        raise PredictionError(f"duplicate prediction ids: {sorted(set(duplicates))}")
    return out


def _match_chunk(pairs: list[tuple[str, str]]) -> list[bool]:
    return [normalize(pred) == normalize(gold) for pred, gold in pairs]


def score_exact_match(dataset_path: str, predictions_path: str,
                      mismatch_limit: int = 20, workers: int = 1) -> EvalReport:
    """EM over normalized strings, sliced by the example metadata.

    Every dataset id must have exactly one prediction; missing or stray ids
    fail closed with the offending ids listed. Matching parallelizes per
    example when workers > 1; the report is identical for any worker count.
    """
    predictions = read_predictions(predictions_path)
    rows: list[tuple[str, str, str, SliceKey]] = []  # id, gold, prediction, slice
    missing: list[str] = []
    seen: set[str] = set()
    for example in read_dataset(dataset_path, validate_outputs=False):
        seen.add(example.id)
        if example.id not in predictions:
            missing.append(example.id)
            continue
        rows.append((example.id, example.output, predictions[example.id],
                     _slice_key(example.meta)))
    if missing:
        raise PredictionError(f"no prediction for dataset ids: {missing[:20]}"
                              + ("..." if len(missing) > 20 else ""))
    stray = sorted(set(predictions) - seen)
    if stray:
        raise PredictionError(f"predictions for unknown ids: {stray[:20]}"
                              + ("..." if len(stray) > 20 else ""))

    pairs = [(pred, gold) for _, gold, pred, _ in rows]
    if workers > 1 and len(pairs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        size = max(1, len(pairs) // (workers * 4))
        chunks = [pairs[i:i + size] for i in range(0, len(pairs), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            matched_flags = [m for chunk in pool.map(_match_chunk, chunks)
                             for m in chunk]
    else:
        matched_flags = _match_chunk(pairs)

    report = EvalReport()
    for (ex_id, gold, pred, key), matched in zip(rows, matched_flags):
        report.record(key, matched)
        if not matched and len(report.mismatches) < mismatch_limit:
            report.mismatches.append((ex_id, gold, pred))
    return report


def oracle_selfcheck(dataset_path: str, onto: Ontology,
                     mismatch_limit: int = 20) -> EvalReport:
    """Re-parse every stored input, re-derive gold, and score against the
    stored output. Any uncorrupted generated dataset scores 1.0."""
    report = EvalReport()
    for example in read_dataset(dataset_path):
        try:
            query_text, _, context_text = example.input.partition("\n")
            ctx = parse_context(context_text, onto)
            q = parse_query(query_text, onto)
            gold = derive_gold(ctx, q)
        except Exception as exc:
            raise DatasetError(
                f"cannot re-derive example {example.id}: {exc}") from exc
        if example.meta["task_format"] == TASK_TF:
            if not isinstance(gold, InformTF):
                derived = "<not a true/false answer>"
            else:
                derived = "true" if gold.value else "false"
        else:
            derived = emit_output(gold)
        matched = normalize(derived) == normalize(example.output)
        report.record(_slice_key(example.meta), matched)
        if not matched and len(report.mismatches) < mismatch_limit:
            report.mismatches.append((example.id, example.output, derived))
    return report
