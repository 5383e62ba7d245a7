"""Pseudo-language rendering of sampled items, clue generation and context
assembly.

Base statements use two templates: "<name> is a <type>." and "<name> has
attribute <attr> with value <v>.". Clue statements are truthful comparative
("A is pricier than B.") or superlative ("B is the cheapest with value 2.49.")
sentences appended for the clue-aware training cases, never at evaluation
time. All statements are shuffled together; ordinal ground truth ("the first
one") follows the post-shuffle order of the type statements.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .catalog import Item
from .errors import GenerationError
from .ontology import HIGHER, LOWER, NUMERIC, Ontology

ISA = "isa"
HAS_ATTRIBUTE = "has_attribute"
COMPARATIVE_CLUE = "comparative_clue"
SUPERLATIVE_CLUE = "superlative_clue"

CASE_I = "I"
CASE_II = "II"
CASE_III = "III"
CASES = (CASE_I, CASE_II, CASE_III)


def _article(word: str) -> str:
    return "an" if word[:1].lower() in "aeiou" else "a"


@dataclass(frozen=True)
class Statement:
    kind: str
    subject: str
    text: str
    attribute: str | None = None
    value: str | None = None
    object: str | None = None


@dataclass(frozen=True)
class ReasoningContext:
    case: str
    items: tuple[Item, ...]  # ordinal order: items[0] is "the first one"
    statements: tuple[Statement, ...]
    ordinal_names: tuple[str, ...]
    full_text: str

    @property
    def k(self) -> int:
        return len(self.items)

    def item_by_ordinal(self, ordinal: int) -> Item:
        if not 1 <= ordinal <= len(self.items):
            raise GenerationError(
                f"ordinal {ordinal} out of range for a {len(self.items)}-item context")
        return self.items[ordinal - 1]

    def item_by_name(self, name: str) -> Item:
        lowered = name.lower()
        for item in self.items:
            if item.name.lower() == lowered:
                return item
        raise GenerationError(f"no item named {name!r} in context")

    def carriers(self, attribute: str) -> list[Item]:
        return [i for i in self.items if i.has(attribute)]


def render_statements(items: list[Item], onto: Ontology) -> list[Statement]:
    """One IsA statement per item plus one HasAttribute per present value."""
    out: list[Statement] = []
    for item in items:
        out.append(Statement(
            kind=ISA, subject=item.name, object=item.item_type,
            text=f"{item.name} is {_article(item.item_type)} {item.item_type}.",
        ))
        for spec in onto.attributes:
            if not item.has(spec.name):
                continue
            rendered = spec.format_value(item.values[spec.name])
            out.append(Statement(
                kind=HAS_ATTRIBUTE, subject=item.name, attribute=spec.name,
                value=rendered,
                text=f"{item.name} has attribute {spec.name} with value {rendered}.",
            ))
    return out


def make_comparative_clues(items: list[Item], attribute: str, onto: Ontology,
                           rng: random.Random) -> list[Statement]:
    """One truthful clue per neighboring pair in attribute order.

    The direction of each clue is random and independent of any query:
    a sorted pair (lo, hi) renders either "hi is pricier than lo." or
    "lo is cheaper than hi.".
    """
    spec = onto.attribute(attribute)
    if spec.kind != NUMERIC:
        raise GenerationError(f"comparative clues undefined on categorical "
                              f"attribute {attribute!r}")
    carriers = [i for i in items if i.has(attribute)]
    if len(carriers) < 2:
        raise GenerationError(f"need at least 2 items carrying {attribute!r} "
                              f"for comparative clues")
    carriers.sort(key=lambda i: i.values[attribute])
    clues: list[Statement] = []
    for lo, hi in zip(carriers, carriers[1:]):
        if rng.random() < 0.5:
            subject, obj, direction = hi, lo, HIGHER
        else:
            subject, obj, direction = lo, hi, LOWER
        phrase = rng.choice(spec.lexicon.comparative[direction])
        clues.append(Statement(
            kind=COMPARATIVE_CLUE, subject=subject.name, attribute=attribute,
            object=obj.name,
            text=f"{subject.name} is {phrase} than {obj.name}.",
        ))
    return clues


def make_superlative_clues(items: list[Item], attribute: str, onto: Ontology,
                           rng: random.Random) -> list[Statement]:
    """Clues naming the argmin and argmax items of the attribute."""
    spec = onto.attribute(attribute)
    if spec.kind != NUMERIC:
        raise GenerationError(f"superlative clues undefined on categorical "
                              f"attribute {attribute!r}")
    carriers = [i for i in items if i.has(attribute)]
    if not carriers:
        raise GenerationError(f"no item carries {attribute!r}")
    clues: list[Statement] = []
    for direction, pick in ((LOWER, min), (HIGHER, max)):
        extreme = pick(carriers, key=lambda i: i.values[attribute])
        phrase = rng.choice(spec.lexicon.superlative[direction])
        rendered = spec.format_value(extreme.values[attribute])
        clues.append(Statement(
            kind=SUPERLATIVE_CLUE, subject=extreme.name, attribute=attribute,
            value=rendered,
            text=f"{extreme.name} is {phrase} with value {rendered}.",
        ))
    return clues


def parse_context(text: str, onto: Ontology) -> ReasoningContext:
    """Rebuild a context from its rendered full text.

    Inverse of assemble_context's rendering: statements are recognized
    against the same templates, items are re-assembled with values typed by
    the ontology, and ordinals follow the order of the type statements.
    Unrecognized sentences raise GenerationError (generator/grammar drift).
    """
    statements: list[Statement] = []
    type_order: list[str] = []
    values: dict[str, dict[str, float | str]] = {}
    types: dict[str, str] = {}

    comp_phrases = []
    sup_phrases = []
    for spec in onto.numeric_attributes():
        for direction in (LOWER, HIGHER):
            comp_phrases.extend(spec.lexicon.comparative.get(direction, ()))
            sup_phrases.extend(spec.lexicon.superlative.get(direction, ()))

    def _alt(phrases):
        return "|".join(re.escape(p) for p in sorted(phrases, key=len, reverse=True))

    has_re = re.compile(r"(?P<name>.+) has attribute (?P<attr>\S+) with value (?P<value>.+)\.")
    sup_re = re.compile(rf"(?P<name>.+) is (?:{_alt(sup_phrases)}) with value (?P<value>.+)\.") \
        if sup_phrases else None
    comp_re = re.compile(rf"(?P<name>.+) is (?:{_alt(comp_phrases)}) than (?P<object>.+)\.") \
        if comp_phrases else None
    isa_re = re.compile(r"(?P<name>.+) is (?:a|an) (?P<type>.+)\.")

    text = text.strip()
    sentences = [s + "." for s in text[:-1].split(". ")] if text else []
    for sentence in sentences:
        m = has_re.fullmatch(sentence)
        if m:
            name, attr, rendered = m.group("name"), m.group("attr"), m.group("value")
            if not onto.has_attribute(attr):
                raise GenerationError(f"unknown attribute in statement: {sentence!r}")
            spec = onto.attribute(attr)
            value = float(rendered) if spec.kind == NUMERIC else rendered
            values.setdefault(name, {})[attr] = value
            statements.append(Statement(kind=HAS_ATTRIBUTE, subject=name,
                                        attribute=attr, value=rendered,
                                        text=sentence))
            continue
        m = sup_re.fullmatch(sentence) if sup_re else None
        if m:
            statements.append(Statement(kind=SUPERLATIVE_CLUE, subject=m.group("name"),
                                        value=m.group("value"), text=sentence))
            continue
        m = comp_re.fullmatch(sentence) if comp_re else None
        if m:
            statements.append(Statement(kind=COMPARATIVE_CLUE, subject=m.group("name"),
                                        object=m.group("object"), text=sentence))
            continue
        m = isa_re.fullmatch(sentence)
        if m:
            name, item_type = m.group("name"), m.group("type")
            types[name] = item_type
            type_order.append(name)
            statements.append(Statement(kind=ISA, subject=name, object=item_type,
                                        text=sentence))
            continue
        raise GenerationError(f"unrecognized context statement: {sentence!r}")

    items = []
    for name in type_order:
        items.append(Item(name=name, item_type=types[name],
                          values=values.get(name, {})))
    orphans = set(values) - set(types)
    if orphans:
        raise GenerationError(f"attribute statements for unknown items: {sorted(orphans)}")
    has_sup = any(s.kind == SUPERLATIVE_CLUE for s in statements)
    has_comp = any(s.kind == COMPARATIVE_CLUE for s in statements)
    case = CASE_III if has_sup else (CASE_II if has_comp else CASE_I)
    return ReasoningContext(
        case=case, items=tuple(items), statements=tuple(statements),
        ordinal_names=tuple(type_order), full_text=text)


def assemble_context(items: list[Item], case: str, onto: Ontology,
                     rng: random.Random) -> ReasoningContext:
    """Render, add per-case clues, shuffle and record ordinal ground truth."""
    if case not in CASES:
        raise GenerationError(f"unknown case {case!r}")
    statements = render_statements(items, onto)
    if case in (CASE_II, CASE_III):
        for spec in onto.numeric_attributes():
            if sum(1 for i in items if i.has(spec.name)) >= 2:
                statements.extend(make_comparative_clues(items, spec.name, onto, rng))
    if case == CASE_III:
        for spec in onto.numeric_attributes():
            if any(i.has(spec.name) for i in items):
                statements.extend(make_superlative_clues(items, spec.name, onto, rng))
    rng.shuffle(statements)
    ordinal_names = tuple(s.subject for s in statements if s.kind == ISA)
    by_name = {i.name: i for i in items}
    return ReasoningContext(
        case=case,
        items=tuple(by_name[name] for name in ordinal_names),
        statements=tuple(statements),
        ordinal_names=ordinal_names,
        full_text=" ".join(s.text for s in statements),
    )
