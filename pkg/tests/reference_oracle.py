"""Naive reference evaluator, written independently of the main oracle.

Everything is computed by direct enumeration over the context items and a
literal truth table per relation, and the answer is assembled as a plain
string. Only the shared data types are imported; none of the decision code
in dialoracle.oracle is reused.
"""

from __future__ import annotations

from dialoracle.contextgen import ReasoningContext
from dialoracle.ontology import Ontology
from dialoracle.querygen import (ContextRelative, ExplicitValue, ItemRef,
                                 Predicate, QuerySemantics)


def _lookup(items, ref: ItemRef):
    if ref.ordinal is not None:
        if not 1 <= ref.ordinal <= len(items):
            raise ValueError(f"ordinal {ref.ordinal} out of range")
        return items[ref.ordinal - 1]
    for item in items:
        if item.name.lower() == ref.name.lower():
            return item
    raise ValueError(f"no item named {ref.name!r}")


def _passes(items, item, pred: Predicate) -> bool:
    if pred.attribute not in item.values:
        return False
    value = item.values[pred.attribute]
    operand = pred.operand
    if pred.op == "include":
        return value == operand.value
    if pred.op == "exclude":
        return value != operand.value
    if isinstance(operand, ItemRef):
        other = _lookup(items, operand)
        if pred.attribute not in other.values:
            raise ValueError("comparison target lacks the attribute")
        threshold = other.values[pred.attribute]
    elif isinstance(operand, ExplicitValue):
        threshold = float(operand.value)
    else:
        raise ValueError("not a filter predicate")
    table = {
        "less-than": value < threshold,
        "more-than": value > threshold,
        "equal": value == threshold,
    }
    return table[pred.op]


def _carriers(items, attribute):
    return [item for item in items if attribute in item.values]


def _fmt(onto: Ontology, attribute: str, value: float) -> str:
    decimals = onto.attribute(attribute).decimals
    return f"{value:.{decimals}f}"


def _constraint_strings(items, preds, onto) -> str:
    parts = []
    for pred in preds:
        if isinstance(pred.operand, ExplicitValue):
            parts.append(f"{pred.op} {pred.attribute} {pred.operand.lexical}")
            continue
        carriers = _carriers(items, pred.attribute)
        if not carriers:
            raise ValueError("context-relative constraint without carriers")
        values = [item.values[pred.attribute] for item in carriers]
        if pred.op in ("less-than", "min"):
            parts.append(f"less-than {pred.attribute} "
                         f"{_fmt(onto, pred.attribute, min(values))}")
        elif pred.op in ("more-than", "max"):
            parts.append(f"more-than {pred.attribute} "
                         f"{_fmt(onto, pred.attribute, max(values))}")
        else:
            raise ValueError(f"cannot extract from op {pred.op!r}")
    return " and ".join(parts)


def reference_answer(ctx: ReasoningContext, q: QuerySemantics,
                     onto: Ontology) -> str:
    """The canonical answer string, computed by brute force."""
    items = list(ctx.items)

    if q.action == "no_reason":
        return "NoAnswer"

    if q.action == "inform_tf":
        subject = _lookup(items, q.subject)
        pred = q.predicates[0]
        if pred.attribute not in subject.values:
            raise ValueError("subject lacks the attribute")
        if pred.op in ("min", "max"):
            ranked = sorted(_carriers(items, pred.attribute),
                            key=lambda item: item.values[pred.attribute])
            winner = ranked[0] if pred.op == "min" else ranked[-1]
            verdict = winner.name == subject.name
        elif isinstance(pred.operand, ContextRelative):
            mine = subject.values[pred.attribute]
            verdict = True
            for other in _carriers(items, pred.attribute):
                if other.name == subject.name:
                    continue
                if pred.op == "less-than" and not mine < other.values[pred.attribute]:
                    verdict = False
                if pred.op == "more-than" and not mine > other.values[pred.attribute]:
                    verdict = False
        else:
            verdict = _passes(items, subject, pred)
        return "inform true" if verdict else "inform false"

    verb = "select" if q.action == "select" else "inform"

    if any(isinstance(p.operand, ContextRelative) for p in q.predicates):
        return _constraint_strings(items, q.predicates, onto)

    minmax = [p for p in q.predicates if p.op in ("min", "max")]
    filters = [p for p in q.predicates if p.op not in ("min", "max")]
    survivors = [item for item in items
                 if all(_passes(items, item, p) for p in filters)]
    if minmax:
        head = minmax[0]
        ranked = sorted(_carriers(survivors, head.attribute),
                        key=lambda item: item.values[head.attribute])
        if ranked:
            winner = ranked[0] if head.op == "min" else ranked[-1]
            return f"{verb} {winner.name}"
        return _constraint_strings(items, q.predicates, onto)
    if survivors:
        return f"{verb} " + " and ".join(item.name for item in survivors)
    return _constraint_strings(items, q.predicates, onto)
