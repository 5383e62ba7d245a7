"""Symbolic reasoner: answers queries over a context or extracts constraints.

The decision procedure mirrors the three dialogue scenarios: answer from the
context when the information is there, hand constraints to the back end when
only partial inference is possible, and emit the reserved NoAnswer token when
no reasoning is required. Evaluation always reads raw attribute values; clue
statements are redundant by construction and never consulted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .contextgen import ReasoningContext
from .errors import OracleError, OutputParseError
from .ontology import EXCLUDE, INCLUDE
from .querygen import (EQUAL, LESS_THAN, MAX, MIN, MORE_THAN, INFORM_TF,
                       NO_REASON, SELECT, ContextRelative, ExplicitValue,
                       ItemRef, Predicate, QuerySemantics)

NO_ANSWER_TOKEN = "NoAnswer"

RELATIONS = (INCLUDE, EXCLUDE, EQUAL, LESS_THAN, MORE_THAN)

# superlative ops fall through to their context-relative comparative
_FALLTHROUGH_REL = {MIN: LESS_THAN, MAX: MORE_THAN}


@dataclass(frozen=True)
class Constraint:
    relation: str  # include | exclude | equal | less-than | more-than
    attribute: str
    value: str  # digit-form numeral or category token


@dataclass(frozen=True)
class InformTF:
    value: bool


@dataclass(frozen=True)
class InformItems:
    names: tuple[str, ...]


@dataclass(frozen=True)
class SelectItems:
    names: tuple[str, ...]


@dataclass(frozen=True)
class Constraints:
    constraints: tuple[Constraint, ...]


@dataclass(frozen=True)
class NoAnswer:
    pass


GoldOutput = InformTF | InformItems | SelectItems | Constraints | NoAnswer


def _resolve_ref(ctx: ReasoningContext, ref: ItemRef):
    if ref.ordinal is not None:
        return ctx.item_by_ordinal(ref.ordinal)
    return ctx.item_by_name(ref.name)


def _satisfies(ctx: ReasoningContext, item, pred: Predicate) -> bool:
    """Truth of one explicit/item-ref predicate for one item.

    Items lacking the referenced attribute never satisfy a predicate on it.
    """
    value = item.values.get(pred.attribute)
    if value is None:
        return False
    operand = pred.operand
    if pred.op == INCLUDE:
        return value == operand.value
    if pred.op == EXCLUDE:
        return value != operand.value
    if isinstance(operand, ItemRef):
        other = _resolve_ref(ctx, operand)
        other_value = other.values.get(pred.attribute)
        if other_value is None:
            raise OracleError(
                f"{other.name!r} does not carry attribute {pred.attribute!r}")
        threshold = other_value
    elif isinstance(operand, ExplicitValue):
        threshold = float(operand.value)
    else:
        raise OracleError(f"predicate operand {operand!r} not usable in a filter")
    if pred.op == LESS_THAN:
        return value < threshold
    if pred.op == MORE_THAN:
        return value > threshold
    if pred.op == EQUAL:
        return value == threshold
    raise OracleError(f"op {pred.op!r} is not a filter predicate")


def filter_items(ctx: ReasoningContext, predicates: list[Predicate]) -> list[str]:
    """Names of items satisfying every predicate, in ordinal order."""
    for pred in predicates:
        if pred.op in (MIN, MAX) or isinstance(pred.operand, ContextRelative):
            raise OracleError(f"predicate {pred.op!r} with operand "
                              f"{pred.operand!r} cannot be filtered directly")
    return [item.name for item in ctx.items
            if all(_satisfies(ctx, item, p) for p in predicates)]


def resolve_superlative(ctx: ReasoningContext, attribute: str, direction: str,
                        pre_filter: list[Predicate] | None = None) -> list[str]:
    """Argmin/argmax of an attribute over the items passing the pre-filter.

    direction is "min" or "max". Singleton on generated data thanks to the
    numeric-distinctness sampling rule.
    """
    survivors = set(filter_items(ctx, pre_filter or []))
    candidates = [item for item in ctx.items
                  if item.name in survivors and item.has(attribute)]
    if not candidates:
        raise OracleError(f"no surviving item carries {attribute!r}")
    pick = min if direction == MIN else max
    winner = pick(candidates, key=lambda i: i.values[attribute])
    return [winner.name]


def eval_true_false(ctx: ReasoningContext, subject: ItemRef,
                    predicate: Predicate) -> bool:
    """Truth of a predicate for a referenced item, from raw values only."""
    item = _resolve_ref(ctx, subject)
    if not item.has(predicate.attribute):
        raise OracleError(
            f"{item.name!r} does not carry attribute {predicate.attribute!r}")
    if predicate.op in (MIN, MAX):
        extreme = resolve_superlative(ctx, predicate.attribute, predicate.op)
        return item.name in extreme
    if isinstance(predicate.operand, ContextRelative):
        # "Is the second one cheaper?": does the subject beat everything
        # else shown? Vacuously true when nothing else carries the attribute.
        value = item.values[predicate.attribute]
        others = [i.values[predicate.attribute] for i in ctx.items
                  if i.name != item.name and i.has(predicate.attribute)]
        if predicate.op == LESS_THAN:
            return all(value < v for v in others)
        if predicate.op == MORE_THAN:
            return all(value > v for v in others)
        raise OracleError(f"op {predicate.op!r} cannot be context-relative")
    return _satisfies(ctx, item, predicate)


def _context_extreme(ctx: ReasoningContext, attribute: str, op: str) -> float:
    values = [item.values[attribute] for item in ctx.items if item.has(attribute)]
    if not values:
        raise OracleError(
            f"cannot resolve a context-relative {attribute!r} constraint: "
            f"no context item carries the attribute")
    return min(values) if op in (LESS_THAN, MIN) else max(values)


def extract_constraints(ctx: ReasoningContext,
                        predicates: list[Predicate]) -> list[Constraint]:
    """Constraint triples in query mention order.

    Explicit operands keep the query's numeral spelling; context-relative
    operands (and superlatives falling through) resolve to the value that
    strictly improves on every context item.
    """
    out: list[Constraint] = []
    for pred in predicates:
        if isinstance(pred.operand, ExplicitValue):
            out.append(Constraint(pred.op, pred.attribute, pred.operand.lexical))
            continue
        relation = _FALLTHROUGH_REL.get(pred.op, pred.op)
        if relation not in (LESS_THAN, MORE_THAN):
            raise OracleError(f"cannot extract a constraint from op {pred.op!r} "
                              f"with operand {pred.operand!r}")
        extreme = _context_extreme(ctx, pred.attribute, relation)
        out.append(Constraint(relation, pred.attribute,
                              _rendered_value(ctx, pred.attribute, extreme)))
    return out


def _rendered_value(ctx: ReasoningContext, attribute: str, value: float) -> str:
    # echo the exact spelling the context used for this value
    for stmt in ctx.statements:
        if stmt.attribute == attribute and stmt.value is not None:
            try:
                if float(stmt.value) == value:
                    return stmt.value
            except ValueError:
                continue
    return f"{value:.10f}".rstrip("0").rstrip(".")


def derive_gold(ctx: ReasoningContext, q: QuerySemantics,
                trace: list[str] | None = None) -> GoldOutput:
    """Decision procedure over the three scenarios.

    no-reasoning -> NoAnswer; true/false -> InformTF; otherwise answer with
    context items when some item qualifies, else extract constraints.
    Pass a list as trace to collect which rule fired and which items matched.
    """
    note = trace.append if trace is not None else (lambda _msg: None)
    if q.action == NO_REASON:
        note("no reasoning required -> NoAnswer")
        return NoAnswer()
    if q.action == INFORM_TF:
        item = _resolve_ref(ctx, q.subject)
        note(f"true/false question about {item.name!r}")
        return InformTF(eval_true_false(ctx, q.subject, q.predicates[0]))

    preds = list(q.predicates)
    wrap = SelectItems if q.action == SELECT else InformItems

    if any(isinstance(p.operand, ContextRelative) for p in preds):
        note("query is relative to everything shown -> extract constraints")
        return Constraints(tuple(extract_constraints(ctx, preds)))

    minmax = [p for p in preds if p.op in (MIN, MAX)]
    if minmax:
        head = minmax[0]
        rest = [p for p in preds if p is not head]
        survivors = set(filter_items(ctx, rest))
        candidates = [i for i in ctx.items
                      if i.name in survivors and i.has(head.attribute)]
        if candidates:
            pick = min if head.op == MIN else max
            winner = pick(candidates, key=lambda i: i.values[head.attribute])
            note(f"superlative {head.op} over {head.attribute!r}; "
                 f"candidates {[c.name for c in candidates]} -> {winner.name!r}")
            return wrap((winner.name,))
        note("pre-filter eliminated every candidate -> extract constraints")
        return Constraints(tuple(extract_constraints(ctx, preds)))

    survivors = filter_items(ctx, preds)
    if survivors:
        note(f"filter matched {survivors}")
        return wrap(tuple(survivors))
    note("no item satisfies the filters -> extract constraints")
    return Constraints(tuple(extract_constraints(ctx, preds)))


# ---------------------------------------------------------------------------
# canonical output grammar (see data/output_grammar.ebnf)

def emit_output(gold: GoldOutput) -> str:
    if isinstance(gold, NoAnswer):
        return NO_ANSWER_TOKEN
    if isinstance(gold, InformTF):
        return "inform true" if gold.value else "inform false"
    if isinstance(gold, InformItems):
        _check_names(gold.names)
        return "inform " + " and ".join(gold.names)
    if isinstance(gold, SelectItems):
        _check_names(gold.names)
        return "select " + " and ".join(gold.names)
    if isinstance(gold, Constraints):
        if not gold.constraints:
            raise OracleError("constraint list must be non-empty")
        return " and ".join(f"{c.relation} {c.attribute} {c.value}"
                            for c in gold.constraints)
    raise OracleError(f"cannot emit {gold!r}")


def _check_names(names: tuple[str, ...]) -> None:
    if not names:
        raise OracleError("item list must be non-empty")
    if len(set(names)) != len(names):
        raise OracleError("item list has duplicates")
    for name in names:
        if " and " in name or not name.strip():
            raise OracleError(f"item name {name!r} not expressible in the grammar")


_NUMERAL_RE = re.compile(r"\d+(?:\.\d+)?")
_TOKEN_RE = re.compile(r"[A-Za-z][A-Za-z0-9\-]*")
_ATTR_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*")
# item names are title-cased ("Yogurt Anisakis"); the uppercase start is what
# separates them from constraint relations in the grammar
_NAME_RE = re.compile(r"[A-Z0-9][A-Za-z0-9' \-]*")


def parse_output(s: str) -> GoldOutput:
    """Inverse of emit_output on its image; off-grammar strings raise
    OutputParseError with the failing position."""
    if s == NO_ANSWER_TOKEN:
        return NoAnswer()
    if s == "inform true":
        return InformTF(True)
    if s == "inform false":
        return InformTF(False)
    for prefix, wrap in (("inform ", InformItems), ("select ", SelectItems)):
        if s.startswith(prefix):
            body = s[len(prefix):]
            names = body.split(" and ")
            position = len(prefix)
            seen = set()
            for name in names:
                if not _NAME_RE.fullmatch(name):
                    raise OutputParseError(f"bad item name {name!r}", position)
                if name in seen:
                    raise OutputParseError(f"duplicate item name {name!r}", position)
                seen.add(name)
                position += len(name) + len(" and ")
            return wrap(tuple(names))
    # otherwise the string must be a constraint list
    constraints = []
    position = 0
    for segment in s.split(" and "):
        parts = segment.split(" ")
        if len(parts) != 3:
            raise OutputParseError(
                f"constraint {segment!r} is not 'relation attribute value'", position)
        relation, attribute, value = parts
        if relation not in RELATIONS:
            raise OutputParseError(f"unknown relation {relation!r}", position)
        if not _ATTR_RE.fullmatch(attribute):
            raise OutputParseError(f"bad attribute {attribute!r}",
                                   position + len(relation) + 1)
        value_pos = position + len(relation) + len(attribute) + 2
        if relation in (EQUAL, LESS_THAN, MORE_THAN):
            if not _NUMERAL_RE.fullmatch(value):
                raise OutputParseError(f"expected a numeral, got {value!r}", value_pos)
        else:
            if not _TOKEN_RE.fullmatch(value):
                raise OutputParseError(f"bad category token {value!r}", value_pos)
        constraints.append(Constraint(relation, attribute, value))
        position += len(segment) + len(" and ")
    return Constraints(tuple(constraints))
