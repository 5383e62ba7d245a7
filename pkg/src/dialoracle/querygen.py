"""Query semantics, surface realization, and template-grammar parsing.

A query is machine-readable first (action + predicates), then realized into
one of several surface variations per template family. parse_query inverts
realize_surface on the known grammar and falls back to the no-reasoning
semantics for anything else, so unknown input is always answerable with
"NoAnswer".
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Callable, Mapping

import yaml

from .contextgen import ReasoningContext
from .errors import GenerationError, SpokenNumberError
from .numwords import SPOKEN_TOKENS, number_to_spoken, spoken_to_number
from .ontology import (CATEGORICAL, EXCLUDE, HIGHER, INCLUDE, LOWER, NUMERIC,
                       AttributeSpec, Ontology)

# relation vocabulary; shared with the answer grammar
LESS_THAN = "less-than"
MORE_THAN = "more-than"
EQUAL = "equal"
MIN = "min"
MAX = "max"

# actions
INFORM_OPEN = "inform_open"
INFORM_TF = "inform_tf"
SELECT = "select"
NO_REASON = "no_reason"

COMP_OP_FOR_DIRECTION = {LOWER: LESS_THAN, HIGHER: MORE_THAN}
DIRECTION_FOR_OP = {LESS_THAN: LOWER, MORE_THAN: HIGHER, MIN: LOWER, MAX: HIGHER}
SUP_OP_FOR_DIRECTION = {LOWER: MIN, HIGHER: MAX}

_ORDINAL_WORDS = ("first", "second", "third", "fourth", "fifth",
                  "sixth", "seventh", "eighth", "ninth", "tenth")

ANSWERABLE = "inform_select"  # gold is an inform/select over context items
EXTRACT = "extract"           # gold is a constraint list


@dataclass(frozen=True)
class ExplicitValue:
    value: float | str
    lexical: str  # the numeral exactly as the query spells it ("2", "3.50")


@dataclass(frozen=True)
class ContextRelative:
    """Operand resolved against everything shown so far ("anything cheaper?")."""


@dataclass(frozen=True)
class ItemRef:
    ordinal: int | None = None  # 1-based position in the context
    name: str | None = None


Operand = ExplicitValue | ContextRelative | ItemRef | None


@dataclass(frozen=True)
class Predicate:
    attribute: str
    op: str  # less-than | more-than | equal | include | exclude | min | max
    operand: Operand = None


@dataclass(frozen=True)
class QuerySemantics:
    action: str
    subject: ItemRef | None = None  # inform_tf only
    predicates: tuple[Predicate, ...] = ()
    spoken: bool = False


NO_REASON_QUERY = QuerySemantics(action=NO_REASON)


def canonical_lexical(spec: AttributeSpec, value: float) -> str:
    """Numeral spelling used in generated queries: "2" or "3.50"/"4.5"."""
    if value == int(value):
        return str(int(value))
    return f"{value:.{spec.decimals}f}"


def query_has_numeral(q: QuerySemantics) -> bool:
    return any(isinstance(p.operand, ExplicitValue) and not isinstance(p.operand.value, str)
               for p in q.predicates)


def with_spoken(q: QuerySemantics) -> QuerySemantics:
    """Mark a query for spoken-form realization (only if it has a numeral)."""
    if query_has_numeral(q):
        return replace(q, spoken=True)
    return q


# ---------------------------------------------------------------------------
# template inventory

@dataclass(frozen=True)
class TemplateFamily:
    id: str
    action: str
    shape: str
    variations: tuple[str, ...]


@dataclass(frozen=True)
class TemplateInventory:
    families: tuple[TemplateFamily, ...]
    no_reason_pool: tuple[str, ...]

    def family(self, action: str, shape: str) -> TemplateFamily:
        for fam in self.families:
            if fam.action == action and fam.shape == shape:
                return fam
        raise GenerationError(f"no template family for action={action!r} shape={shape!r}")


_SLOT_RE = re.compile(r"\{([a-z0-9]+)\}")


@lru_cache(maxsize=None)
def load_templates() -> TemplateInventory:
    text = resources.files("dialoracle.data").joinpath("templates.yaml").read_text("utf-8")
    raw = yaml.safe_load(text)
    if raw.get("schema_version") != 1:
        raise GenerationError("unsupported templates schema_version")
    families = []
    for fam in raw["families"]:
        variations = tuple(fam["variations"])
        slot_sets = {frozenset(_SLOT_RE.findall(v)) for v in variations}
        if len(slot_sets) != 1:
            raise GenerationError(f"family {fam['id']!r} variations disagree on slots")
        families.append(TemplateFamily(
            id=fam["id"], action=fam["action"], shape=fam["shape"],
            variations=variations))
    return TemplateInventory(families=tuple(families),
                             no_reason_pool=tuple(raw["no_reason"]))


# ---------------------------------------------------------------------------
# realization

def _render_ref(ref: ItemRef) -> str:
    if ref.ordinal is not None:
        return f"the {_ORDINAL_WORDS[ref.ordinal - 1]} one"
    return ref.name or ""


def _render_value(spec: AttributeSpec, operand: ExplicitValue, spoken: bool) -> str:
    if spoken:
        return number_to_spoken(float(operand.value), spec.unit)
    if spec.unit == "currency":
        return f"${operand.lexical}"
    return operand.lexical


def _comp_phrase(spec: AttributeSpec, op: str, rng: random.Random) -> str:
    return rng.choice(spec.lexicon.comparative[DIRECTION_FOR_OP[op]])


def _sup_phrase(spec: AttributeSpec, op: str, rng: random.Random) -> str:
    return rng.choice(spec.lexicon.superlative[DIRECTION_FOR_OP[op]])


def _clause_text(pred: Predicate, onto: Ontology, rng: random.Random,
                 spoken: bool) -> str:
    spec = onto.attribute(pred.attribute)
    if pred.op == INCLUDE:
        return rng.choice(spec.lexicon.include_clauses).format(value=pred.operand.value)
    if pred.op == EXCLUDE:
        return rng.choice(spec.lexicon.exclude_clauses).format(value=pred.operand.value)
    if pred.op in (LESS_THAN, MORE_THAN):
        phrase = _comp_phrase(spec, pred.op, rng)
        if isinstance(pred.operand, ExplicitValue):
            return f"is {phrase} than {_render_value(spec, pred.operand, spoken)}"
        return f"is {phrase}"
    raise GenerationError(f"no clause form for op {pred.op!r}")


def realize_surface(q: QuerySemantics, onto: Ontology, rng: random.Random,
                    inventory: TemplateInventory | None = None) -> str:
    """Render a query as one uniformly drawn surface variation."""
    inv = inventory or load_templates()
    if q.action == NO_REASON:
        return rng.choice(inv.no_reason_pool)

    preds = q.predicates
    if q.action == INFORM_TF:
        pred = preds[0]
        spec = onto.attribute(pred.attribute)
        subject = _render_ref(q.subject)
        if pred.op in (MIN, MAX):
            fam = inv.family(INFORM_TF, "tf_superlative")
            return rng.choice(fam.variations).format(
                subject=subject, sup=_sup_phrase(spec, pred.op, rng))
        if isinstance(pred.operand, ItemRef):
            fam = inv.family(INFORM_TF, "tf_comparative_item")
            return rng.choice(fam.variations).format(
                subject=subject, comp=_comp_phrase(spec, pred.op, rng),
                object=_render_ref(pred.operand))
        fam = inv.family(INFORM_TF, "tf_comparative_value")
        return rng.choice(fam.variations).format(
            subject=subject, comp=_comp_phrase(spec, pred.op, rng),
            value=_render_value(spec, pred.operand, q.spoken))

    if len(preds) == 1:
        pred = preds[0]
        spec = onto.attribute(pred.attribute)
        if pred.op in (MIN, MAX):
            fam = inv.family(q.action, "superlative")
            return rng.choice(fam.variations).format(sup=_sup_phrase(spec, pred.op, rng))
        if q.action == INFORM_OPEN:
            if pred.op == INCLUDE:
                return rng.choice(spec.lexicon.include_patterns).format(
                    value=pred.operand.value)
            if pred.op == EXCLUDE:
                return rng.choice(spec.lexicon.exclude_patterns).format(
                    value=pred.operand.value)
            if pred.op == EQUAL:
                if spec.unit == "currency":
                    fam = inv.family(INFORM_OPEN, "equal_currency")
                    return rng.choice(fam.variations).format(
                        value=_render_value(spec, pred.operand, q.spoken))
                fam = inv.family(INFORM_OPEN, "equal_named")
                return rng.choice(fam.variations).format(
                    attr=spec.name,
                    value=_render_value(spec, pred.operand, q.spoken))
            if isinstance(pred.operand, ContextRelative):
                fam = inv.family(INFORM_OPEN, "filter_context_relative")
                return rng.choice(fam.variations).format(
                    comp=_comp_phrase(spec, pred.op, rng))
            fam = inv.family(INFORM_OPEN, "filter_comparative_value")
            return rng.choice(fam.variations).format(
                comp=_comp_phrase(spec, pred.op, rng),
                value=_render_value(spec, pred.operand, q.spoken))
        fam = inv.family(SELECT, "one_clause")
        return rng.choice(fam.variations).format(
            clause=_clause_text(pred, onto, rng, q.spoken))

    first, second = preds
    if first.op in (MIN, MAX):
        spec = onto.attribute(first.attribute)
        fam = inv.family(q.action, "superlative_filter")
        return rng.choice(fam.variations).format(
            sup=_sup_phrase(spec, first.op, rng),
            clause=_clause_text(second, onto, rng, q.spoken))
    fam = inv.family(q.action, "two_clauses")
    return rng.choice(fam.variations).format(
        clause1=_clause_text(first, onto, rng, q.spoken),
        clause2=_clause_text(second, onto, rng, q.spoken))


# ---------------------------------------------------------------------------
# parsing

_NAME_PIECE = r"[A-Za-z][A-Za-z' \-]*?"
_ORDINAL_PIECE = r"the (?:%s) one" % "|".join(_ORDINAL_WORDS)
_REF_PIECE = rf"(?:{_ORDINAL_PIECE}|{_NAME_PIECE})"
_DIGIT_VALUE_RE = re.compile(r"\$?\d+(?:\.\d{1,2})?")
_CAT_PIECE = r"[A-Za-z][A-Za-z\-]*"


def _alternation(phrases) -> str:
    return "|".join(re.escape(p) for p in sorted(phrases, key=len, reverse=True))


def _compile(pattern: str, pieces: Mapping[str, str]) -> re.Pattern:
    # terminal punctuation is forgiving: typed queries may drop or swap it
    terminal = pattern.endswith((".", "?", "!"))
    if terminal:
        pattern = pattern[:-1]
    parts = _SLOT_RE.split(pattern)
    out = []
    for i, part in enumerate(parts):
        if i % 2 == 1:  # slot name
            out.append(f"(?P<{part}>{pieces[part]})")
        else:
            out.append(re.escape(part))
    if terminal:
        out.append(r"[.?!]?")
    return re.compile("".join(out), re.IGNORECASE)


@dataclass
class _Matcher:
    regex: re.Pattern
    build: Callable[[re.Match], QuerySemantics]


class CompiledGrammar:
    """Per-ontology compiled query grammar: ordered matchers + clause parsers."""

    def __init__(self, onto: Ontology, inventory: TemplateInventory):
        self.onto = onto
        self.comp_map: dict[str, tuple[str, str]] = {}
        self.sup_map: dict[str, tuple[str, str]] = {}
        for spec in onto.numeric_attributes():
            for direction in (LOWER, HIGHER):
                for p in spec.lexicon.comparative.get(direction, ()):
                    self.comp_map[p.lower()] = (spec.name, direction)
                for p in spec.lexicon.superlative.get(direction, ()):
                    self.sup_map[p.lower()] = (spec.name, direction)
        spoken_alt = _alternation(SPOKEN_TOKENS)
        pieces = {
            "subject": _REF_PIECE,
            "object": _REF_PIECE,
            "comp": _alternation(self.comp_map) or "(?!x)x",
            "sup": _alternation(self.sup_map) or "(?!x)x",
            "value": rf"\$?\d+(?:\.\d{{1,2}})?|(?:{spoken_alt})(?:[ -](?:{spoken_alt}))*",
            "cat": _CAT_PIECE,
            "attr": _alternation(a.name for a in onto.attributes),
            "clause": r".+?",
            "clause1": r".+?",
            "clause2": r".+?",
        }
        self._pieces = pieces
        self._ordinal_re = re.compile(_ORDINAL_PIECE, re.IGNORECASE)

        self._clause_matchers: list[tuple[re.Pattern, str, str | None]] = []
        comp_alt, sup_alt = pieces["comp"], pieces["sup"]
        value_piece = pieces["value"]
        self._clause_matchers.append((
            re.compile(rf"is (?P<sup>{sup_alt})", re.IGNORECASE), "minmax", None))
        self._clause_matchers.append((
            re.compile(rf"is (?P<comp>{comp_alt}) than (?P<value>{value_piece})",
                       re.IGNORECASE), "comp_value", None))
        self._clause_matchers.append((
            re.compile(rf"is (?P<comp>{comp_alt})", re.IGNORECASE), "comp_rel", None))
        for spec in onto.categorical_attributes():
            for pat in spec.lexicon.include_clauses:
                self._clause_matchers.append((
                    _compile(pat.replace("{value}", "{cat}"), pieces),
                    "include", spec.name))
            for pat in spec.lexicon.exclude_clauses:
                self._clause_matchers.append((
                    _compile(pat.replace("{value}", "{cat}"), pieces),
                    "exclude", spec.name))

        self.matchers: list[_Matcher] = []
        self._build_matchers(inventory)

    # -- construction helpers -------------------------------------------------

    def _add(self, fam: TemplateFamily, build) -> None:
        for variation in fam.variations:
            self.matchers.append(_Matcher(_compile(variation, self._pieces), build))

    def _build_matchers(self, inv: TemplateInventory) -> None:
        onto = self.onto
        by_shape: dict[tuple[str, str], TemplateFamily] = {
            (f.action, f.shape): f for f in inv.families}

        def add(action, shape, build):
            fam = by_shape.get((action, shape))
            if fam is not None:
                self._add(fam, build)

        add(INFORM_TF, "tf_superlative", self._build_tf_superlative)
        # value before item: a spoken numeral would otherwise parse as a name
        add(INFORM_TF, "tf_comparative_value", self._build_tf_comp_value)
        add(INFORM_TF, "tf_comparative_item", self._build_tf_comp_item)
        add(INFORM_TF, "tf_comparative_relative", self._build_tf_comp_relative)
        for action in (INFORM_OPEN, SELECT):
            add(action, "superlative_filter",
                lambda m, a=action: self._build_sup_filter(m, a))
            add(action, "two_clauses", lambda m, a=action: self._build_two_clauses(m, a))
        add(INFORM_OPEN, "superlative", lambda m: self._build_superlative(m, INFORM_OPEN))
        add(SELECT, "superlative", lambda m: self._build_superlative(m, SELECT))
        add(SELECT, "one_clause", self._build_one_clause)
        add(INFORM_OPEN, "filter_comparative_value", self._build_filter_value)
        add(INFORM_OPEN, "filter_context_relative", self._build_filter_relative)
        currency = [a for a in onto.numeric_attributes() if a.unit == "currency"]
        if len(currency) == 1:
            add(INFORM_OPEN, "equal_currency",
                lambda m, s=currency[0]: self._build_equal(m, s))
        add(INFORM_OPEN, "equal_named", self._build_equal_named)
        # standalone include/exclude surfaces come from the lexicon
        for spec in onto.categorical_attributes():
            for pat in spec.lexicon.include_patterns:
                self.matchers.append(_Matcher(
                    _compile(pat.replace("{value}", "{cat}"), self._pieces),
                    lambda m, s=spec: self._build_inclusion(m, s, INCLUDE)))
            for pat in spec.lexicon.exclude_patterns:
                self.matchers.append(_Matcher(
                    _compile(pat.replace("{value}", "{cat}"), self._pieces),
                    lambda m, s=spec: self._build_inclusion(m, s, EXCLUDE)))

    # -- slot decoding ---------------------------------------------------------

    def _ref(self, text: str) -> ItemRef:
        if self._ordinal_re.fullmatch(text):
            word = text.split()[1].lower()
            return ItemRef(ordinal=_ORDINAL_WORDS.index(word) + 1)
        return ItemRef(name=text)

    def _value(self, text: str, spec: AttributeSpec) -> tuple[ExplicitValue, bool]:
        """Decode a numeral slot; returns (operand, was_spoken)."""
        raw = text.strip()
        if raw.startswith("$"):
            raw = raw[1:]
        if _DIGIT_VALUE_RE.fullmatch(text.strip()):
            return ExplicitValue(value=float(raw), lexical=raw), False
        value = spoken_to_number(raw)  # raises SpokenNumberError off-grammar
        return ExplicitValue(value=value, lexical=canonical_lexical(spec, value)), True

    def _token(self, text: str, spec: AttributeSpec | None = None) -> tuple[str, AttributeSpec]:
        token = text.lower()
        if spec is not None:
            if token not in spec.values:
                raise GenerationError(f"token {token!r} not in {spec.name!r}")
            return token, spec
        owner = self.onto.token_attribute(token)
        if owner is None:
            raise GenerationError(f"unknown category token {token!r}")
        return token, owner

    def _comp(self, text: str) -> tuple[AttributeSpec, str]:
        attr, direction = self.comp_map[text.lower()]
        return self.onto.attribute(attr), COMP_OP_FOR_DIRECTION[direction]

    def _sup(self, text: str) -> tuple[AttributeSpec, str]:
        attr, direction = self.sup_map[text.lower()]
        return self.onto.attribute(attr), SUP_OP_FOR_DIRECTION[direction]

    def parse_clause(self, text: str) -> tuple[Predicate, bool]:
        for regex, kind, attr_name in self._clause_matchers:
            m = regex.fullmatch(text)
            if not m:
                continue
            try:
                if kind == "minmax":
                    spec, op = self._sup(m.group("sup"))
                    return Predicate(spec.name, op), False
                if kind == "comp_value":
                    spec, op = self._comp(m.group("comp"))
                    operand, spoken = self._value(m.group("value"), spec)
                    return Predicate(spec.name, op, operand), spoken
                if kind == "comp_rel":
                    spec, op = self._comp(m.group("comp"))
                    return Predicate(spec.name, op, ContextRelative()), False
                token, spec = self._token(m.group("cat"),
                                          self.onto.attribute(attr_name))
                op = INCLUDE if kind == "include" else EXCLUDE
                return Predicate(spec.name, op, ExplicitValue(token, token)), False
            except (GenerationError, SpokenNumberError, KeyError):
                continue
        raise GenerationError(f"unparseable clause {text!r}")

    # -- per-shape builders ------------------------------------------------------

    def _build_tf_superlative(self, m: re.Match) -> QuerySemantics:
        spec, op = self._sup(m.group("sup"))
        return QuerySemantics(INFORM_TF, subject=self._ref(m.group("subject")),
                              predicates=(Predicate(spec.name, op),))

    def _build_tf_comp_item(self, m: re.Match) -> QuerySemantics:
        spec, op = self._comp(m.group("comp"))
        return QuerySemantics(
            INFORM_TF, subject=self._ref(m.group("subject")),
            predicates=(Predicate(spec.name, op, self._ref(m.group("object"))),))

    def _build_tf_comp_value(self, m: re.Match) -> QuerySemantics:
        spec, op = self._comp(m.group("comp"))
        operand, spoken = self._value(m.group("value"), spec)
        return QuerySemantics(
            INFORM_TF, subject=self._ref(m.group("subject")),
            predicates=(Predicate(spec.name, op, operand),), spoken=spoken)

    def _build_tf_comp_relative(self, m: re.Match) -> QuerySemantics:
        spec, op = self._comp(m.group("comp"))
        return QuerySemantics(
            INFORM_TF, subject=self._ref(m.group("subject")),
            predicates=(Predicate(spec.name, op, ContextRelative()),))

    def _build_superlative(self, m: re.Match, action: str) -> QuerySemantics:
        spec, op = self._sup(m.group("sup"))
        return QuerySemantics(action, predicates=(Predicate(spec.name, op),))

    def _build_sup_filter(self, m: re.Match, action: str) -> QuerySemantics:
        spec, op = self._sup(m.group("sup"))
        clause_pred, spoken = self.parse_clause(m.group("clause"))
        return QuerySemantics(
            action, predicates=(Predicate(spec.name, op), clause_pred), spoken=spoken)

    def _build_two_clauses(self, m: re.Match, action: str) -> QuerySemantics:
        first, spoken1 = self.parse_clause(m.group("clause1"))
        second, spoken2 = self.parse_clause(m.group("clause2"))
        return QuerySemantics(action, predicates=(first, second),
                              spoken=spoken1 or spoken2)

    def _build_one_clause(self, m: re.Match) -> QuerySemantics:
        pred, spoken = self.parse_clause(m.group("clause"))
        return QuerySemantics(SELECT, predicates=(pred,), spoken=spoken)

    def _build_filter_value(self, m: re.Match) -> QuerySemantics:
        spec, op = self._comp(m.group("comp"))
        operand, spoken = self._value(m.group("value"), spec)
        return QuerySemantics(INFORM_OPEN, predicates=(Predicate(spec.name, op, operand),),
                              spoken=spoken)

    def _build_filter_relative(self, m: re.Match) -> QuerySemantics:
        spec, op = self._comp(m.group("comp"))
        return QuerySemantics(
            INFORM_OPEN, predicates=(Predicate(spec.name, op, ContextRelative()),))

    def _build_equal(self, m: re.Match, spec: AttributeSpec) -> QuerySemantics:
        operand, spoken = self._value(m.group("value"), spec)
        return QuerySemantics(INFORM_OPEN, predicates=(Predicate(spec.name, EQUAL, operand),),
                              spoken=spoken)

    def _build_equal_named(self, m: re.Match) -> QuerySemantics:
        spec = self.onto.attribute(m.group("attr").lower())
        if spec.kind != NUMERIC:
            raise GenerationError(f"equal undefined on categorical {spec.name!r}")
        operand, spoken = self._value(m.group("value"), spec)
        return QuerySemantics(INFORM_OPEN, predicates=(Predicate(spec.name, EQUAL, operand),),
                              spoken=spoken)

    def _build_inclusion(self, m: re.Match, spec: AttributeSpec, op: str) -> QuerySemantics:
        token, spec = self._token(m.group("cat"), spec)
        return QuerySemantics(
            INFORM_OPEN, predicates=(Predicate(spec.name, op, ExplicitValue(token, token)),))


@lru_cache(maxsize=8)
def _grammar_for(onto: Ontology) -> CompiledGrammar:
    return CompiledGrammar(onto, load_templates())


def parse_query(surface: str, onto: Ontology) -> QuerySemantics:
    """Invert realize_surface; anything outside the grammar is NO_REASON."""
    text = " ".join(surface.split())
    grammar = _grammar_for(onto)
    for matcher in grammar.matchers:
        m = matcher.regex.fullmatch(text)
        if not m:
            continue
        try:
            return matcher.build(m)
        except (GenerationError, SpokenNumberError, KeyError):
            continue
    return NO_REASON_QUERY


# ---------------------------------------------------------------------------
# applicable-query enumeration and targeted sampling

@dataclass
class QueryGenSettings:
    max_attributes: int = 2          # predicates per query
    thresholds_per_combo: int = 1    # explicit-value draws per enumerated combo
    absent_tokens_per_attribute: int = 1
    token_pools: Mapping[str, tuple[str, ...]] | None = None  # split-local pools
    actions: frozenset[str] | None = None  # restrict enumeration to these actions


def _pool(settings: QueryGenSettings, spec: AttributeSpec) -> tuple[str, ...]:
    if settings.token_pools is not None and spec.name in settings.token_pools:
        return settings.token_pools[spec.name]
    return spec.values


def _grid(spec: AttributeSpec, rng: random.Random,
          lo: float | None = None, hi: float | None = None) -> float | None:
    scale = 10 ** spec.decimals
    lo_i = round((spec.minimum if lo is None else lo) * scale)
    hi_i = round((spec.maximum if hi is None else hi) * scale)
    if hi_i < lo_i:
        return None
    return rng.randint(lo_i, hi_i) / scale


def _threshold(spec: AttributeSpec, rng: random.Random) -> float:
    # mix round numbers ("$2") with on-grid values ("$3.50")
    if spec.decimals and rng.random() < 0.4:
        lo = int(spec.minimum) + 1
        hi = int(spec.maximum)
        if lo <= hi:
            return float(rng.randint(lo, hi))
    return _grid(spec, rng)


def _explicit_num(spec: AttributeSpec, value: float) -> ExplicitValue:
    return ExplicitValue(value=value, lexical=canonical_lexical(spec, value))


def _token_operand(token: str) -> ExplicitValue:
    return ExplicitValue(value=token, lexical=token)


def _carriers(ctx: ReasoningContext, attribute: str) -> list[tuple[int, object]]:
    return [(i + 1, item) for i, item in enumerate(ctx.items) if item.has(attribute)]


def _carrier_values(ctx: ReasoningContext, attribute: str) -> list[float]:
    return [item.values[attribute] for item in ctx.items if item.has(attribute)]


def _present_tokens(ctx: ReasoningContext, spec: AttributeSpec) -> list[str]:
    seen: list[str] = []
    for item in ctx.items:
        tok = item.values.get(spec.name)
        if tok is not None and tok not in seen:
            seen.append(tok)
    return seen


def _absent_token(ctx: ReasoningContext, spec: AttributeSpec,
                  settings: QueryGenSettings, rng: random.Random) -> str | None:
    present = set(_present_tokens(ctx, spec))
    pool = _pool(settings, spec)
    for _ in range(20):
        tok = rng.choice(pool)
        if tok not in present:
            return tok
    candidates = [t for t in pool if t not in present]
    return rng.choice(candidates) if candidates else None


def _step(spec: AttributeSpec) -> float:
    return 10 ** -spec.decimals


def _sat_numeric_pred(ctx: ReasoningContext, spec: AttributeSpec,
                      rng: random.Random, include_equal: bool = False) -> Predicate | None:
    """Explicit numeric predicate that at least one context item satisfies."""
    values = _carrier_values(ctx, spec.name)
    if not values:
        return None
    ops = [LESS_THAN, MORE_THAN] + ([EQUAL] if include_equal else [])
    rng.shuffle(ops)
    for op in ops:
        if op == EQUAL:
            return Predicate(spec.name, EQUAL, _explicit_num(spec, rng.choice(values)))
        if op == LESS_THAN:
            t = _grid(spec, rng, lo=min(values) + _step(spec))
        else:
            t = _grid(spec, rng, hi=max(values) - _step(spec))
        if t is not None:
            return Predicate(spec.name, op, _explicit_num(spec, t))
    return None


def _unsat_numeric_pred(ctx: ReasoningContext, spec: AttributeSpec,
                        rng: random.Random) -> Predicate | None:
    """Explicit numeric predicate no context item satisfies."""
    values = _carrier_values(ctx, spec.name)
    if not values:
        return Predicate(spec.name, rng.choice((LESS_THAN, MORE_THAN)),
                         _explicit_num(spec, _threshold(spec, rng)))
    if rng.random() < 0.5:
        t = _grid(spec, rng, hi=min(values))
        if t is not None:
            return Predicate(spec.name, LESS_THAN, _explicit_num(spec, t))
    t = _grid(spec, rng, lo=max(values))
    if t is not None:
        return Predicate(spec.name, MORE_THAN, _explicit_num(spec, t))
    return None


def _sat_cat_pred(ctx: ReasoningContext, spec: AttributeSpec,
                  settings: QueryGenSettings, rng: random.Random) -> Predicate | None:
    present = _present_tokens(ctx, spec)
    if not present:
        return None
    if rng.random() < 0.5:
        return Predicate(spec.name, INCLUDE, _token_operand(rng.choice(present)))
    tok = _absent_token(ctx, spec, settings, rng)
    if tok is None:
        return Predicate(spec.name, INCLUDE, _token_operand(rng.choice(present)))
    return Predicate(spec.name, EXCLUDE, _token_operand(tok))


def _unsat_cat_pred(ctx: ReasoningContext, spec: AttributeSpec,
                    settings: QueryGenSettings, rng: random.Random) -> Predicate | None:
    tok = _absent_token(ctx, spec, settings, rng)
    if tok is None:
        return None
    return Predicate(spec.name, INCLUDE, _token_operand(tok))


def enumerate_applicable_queries(ctx: ReasoningContext, onto: Ontology,
                                 settings: QueryGenSettings | None = None,
                                 rng: random.Random | None = None) -> list[QuerySemantics]:
    """All query semantics applicable to a context.

    Finite operand spaces (subjects, item pairs, superlatives, tokens present
    in context) enumerate exhaustively; open-ended explicit values draw
    thresholds_per_combo representatives from the passed rng (a fixed default
    keeps repeated calls identical).
    """
    settings = settings or QueryGenSettings()
    rng = rng or random.Random(0)
    out: list[QuerySemantics] = []
    seen: set[QuerySemantics] = set()

    def add(q: QuerySemantics) -> None:
        if settings.actions is not None and q.action not in settings.actions:
            return
        if q not in seen:
            seen.add(q)
            out.append(q)

    add(NO_REASON_QUERY)
    k = ctx.k
    numeric = onto.numeric_attributes()
    categorical = onto.categorical_attributes()
    open_actions = (INFORM_OPEN, SELECT) if k > 0 else (INFORM_OPEN,)

    # single explicit filters (the only reasoning queries available at k=0)
    for spec in numeric:
        for _ in range(settings.thresholds_per_combo):
            for op in (LESS_THAN, MORE_THAN):
                pred = Predicate(spec.name, op, _explicit_num(spec, _threshold(spec, rng)))
                for action in open_actions:
                    add(QuerySemantics(action, predicates=(pred,)))
        add(QuerySemantics(INFORM_OPEN, predicates=(
            Predicate(spec.name, EQUAL, _explicit_num(spec, _threshold(spec, rng))),)))
    for spec in categorical:
        tokens = _present_tokens(ctx, spec)
        absent = _absent_token(ctx, spec, settings, rng)
        if absent is not None:
            tokens = tokens + [absent]
        for tok in tokens:
            for op in (INCLUDE, EXCLUDE):
                for action in open_actions:
                    add(QuerySemantics(action, predicates=(
                        Predicate(spec.name, op, _token_operand(tok)),)))

    # conjunctions of two explicit filters over distinct attributes
    if settings.max_attributes >= 2:
        specs = list(onto.attributes)
        for i, a in enumerate(specs):
            for b in specs[i + 1:]:
                preds = []
                for spec in (a, b):
                    if spec.kind == NUMERIC:
                        preds.append(Predicate(
                            spec.name, rng.choice((LESS_THAN, MORE_THAN)),
                            _explicit_num(spec, _threshold(spec, rng))))
                    else:
                        tokens = _present_tokens(ctx, spec)
                        absent = _absent_token(ctx, spec, settings, rng)
                        if absent is not None:
                            tokens = tokens + [absent]
                        if not tokens:
                            preds.append(None)
                            continue
                        preds.append(Predicate(
                            spec.name, rng.choice((INCLUDE, EXCLUDE)),
                            _token_operand(rng.choice(tokens))))
                if None in preds:
                    continue
                for action in open_actions:
                    add(QuerySemantics(action, predicates=tuple(preds)))

    if k == 0:
        return out

    # true/false queries over numeric attributes
    for spec in numeric:
        carriers = _carriers(ctx, spec.name)
        if not carriers:
            continue
        for ordinal, item in carriers:
            for ref in (ItemRef(ordinal=ordinal), ItemRef(name=item.name)):
                for op in (MIN, MAX):
                    add(QuerySemantics(INFORM_TF, subject=ref,
                                       predicates=(Predicate(spec.name, op),)))
                for _ in range(settings.thresholds_per_combo):
                    for op in (LESS_THAN, MORE_THAN):
                        add(QuerySemantics(
                            INFORM_TF, subject=ref,
                            predicates=(Predicate(spec.name, op,
                                        _explicit_num(spec, _threshold(spec, rng))),)))
        for i, a in carriers:
            for j, b in carriers:
                if i == j:
                    continue
                for op in (LESS_THAN, MORE_THAN):
                    add(QuerySemantics(INFORM_TF, subject=ItemRef(ordinal=i),
                                       predicates=(Predicate(spec.name, op,
                                                   ItemRef(ordinal=j)),)))
                    add(QuerySemantics(INFORM_TF, subject=ItemRef(name=a.name),
                                       predicates=(Predicate(spec.name, op,
                                                   ItemRef(name=b.name)),)))

    # superlatives, context-relative comparatives, and their conjunctions
    for spec in numeric:
        if not _carriers(ctx, spec.name):
            continue
        for op in (MIN, MAX):
            for action in (INFORM_OPEN, SELECT):
                add(QuerySemantics(action, predicates=(Predicate(spec.name, op),)))
        for op in (LESS_THAN, MORE_THAN):
            add(QuerySemantics(INFORM_OPEN, predicates=(
                Predicate(spec.name, op, ContextRelative()),)))
        add(QuerySemantics(INFORM_OPEN, predicates=(
            Predicate(spec.name, EQUAL,
                      _explicit_num(spec, rng.choice(_carrier_values(ctx, spec.name)))),)))

    if settings.max_attributes >= 2:
        for spec in numeric:
            if not _carriers(ctx, spec.name):
                continue
            for op in (MIN, MAX):
                minmax = Predicate(spec.name, op)
                for other in onto.attributes:
                    if other.name == spec.name:
                        continue
                    partners: list[Predicate] = []
                    if other.kind == CATEGORICAL:
                        for tok in _present_tokens(ctx, other):
                            partners.append(Predicate(other.name, INCLUDE, _token_operand(tok)))
                            partners.append(Predicate(other.name, EXCLUDE, _token_operand(tok)))
                        absent = _absent_token(ctx, other, settings, rng)
                        if absent is not None:
                            partners.append(Predicate(other.name, INCLUDE,
                                                      _token_operand(absent)))
                    else:
                        for fop in (LESS_THAN, MORE_THAN):
                            partners.append(Predicate(
                                other.name, fop,
                                _explicit_num(other, _threshold(other, rng))))
                    for partner in partners:
                        for action in (INFORM_OPEN, SELECT):
                            add(QuerySemantics(action, predicates=(minmax, partner)))
        # pairs of context-relative comparatives over distinct attributes
        with_carriers = [s for s in numeric if _carriers(ctx, s.name)]
        for i, a in enumerate(with_carriers):
            for b in with_carriers[i + 1:]:
                for op_a in (LESS_THAN, MORE_THAN):
                    for op_b in (LESS_THAN, MORE_THAN):
                        add(QuerySemantics(INFORM_OPEN, predicates=(
                            Predicate(a.name, op_a, ContextRelative()),
                            Predicate(b.name, op_b, ContextRelative()))))
        # context-relative next to an explicitly unsatisfiable filter
        for spec in with_carriers:
            for other in categorical:
                unsat = _unsat_cat_pred(ctx, other, settings, rng)
                if unsat is None:
                    continue
                for op in (LESS_THAN, MORE_THAN):
                    add(QuerySemantics(INFORM_OPEN, predicates=(
                        Predicate(spec.name, op, ContextRelative()), unsat)))
    return out


def sample_query(ctx: ReasoningContext, onto: Ontology, rng: random.Random,
                 settings: QueryGenSettings | None = None,
                 target_class: str | None = None,
                 target_attributes: int | None = None) -> QuerySemantics | None:
    """Draw one applicable query, optionally pinned to an answer class
    (ANSWERABLE or EXTRACT) and a predicate count.

    Returns None when the context cannot field such a query (caller resamples
    the context). NO_REASON queries are the pipeline's business, not this
    function's.
    """
    settings = settings or QueryGenSettings()
    if target_class == ANSWERABLE:
        return _sample_answerable(ctx, onto, rng, settings, target_attributes)
    if target_class == EXTRACT:
        return _sample_extract(ctx, onto, rng, settings, target_attributes)
    if ctx.k == 0:
        return _sample_extract(ctx, onto, rng, settings, target_attributes)
    if target_attributes is None:
        target_attributes = 2 if (settings.max_attributes >= 2 and rng.random() < 0.35) else 1
    if rng.random() < 0.72:
        q = _sample_answerable(ctx, onto, rng, settings, target_attributes)
        if q is not None:
            return q
    return _sample_extract(ctx, onto, rng, settings, target_attributes)


def _open_or_select(rng: random.Random) -> str:
    return INFORM_OPEN if rng.random() < 0.6 else SELECT


def _rand_ref(ordinal: int, item, rng: random.Random) -> ItemRef:
    return ItemRef(ordinal=ordinal) if rng.random() < 0.6 else ItemRef(name=item.name)


def _sample_tf(ctx: ReasoningContext, onto: Ontology, rng: random.Random) -> QuerySemantics | None:
    specs = [s for s in onto.numeric_attributes() if _carriers(ctx, s.name)]
    if not specs:
        return None
    spec = rng.choice(specs)
    carriers = _carriers(ctx, spec.name)
    kinds = ["minmax", "comp_value"]
    if len(carriers) >= 2:
        kinds.append("comp_item")
        kinds.append("comp_item")  # weight pairwise comparisons up
    kind = rng.choice(kinds)
    ordinal, item = rng.choice(carriers)
    subject = _rand_ref(ordinal, item, rng)
    if kind == "minmax":
        return QuerySemantics(INFORM_TF, subject=subject,
                              predicates=(Predicate(spec.name, rng.choice((MIN, MAX))),))
    if kind == "comp_value":
        pred = Predicate(spec.name, rng.choice((LESS_THAN, MORE_THAN)),
                         _explicit_num(spec, _threshold(spec, rng)))
        return QuerySemantics(INFORM_TF, subject=subject, predicates=(pred,))
    other_ordinal, other = rng.choice([c for c in carriers if c[0] != ordinal])
    if subject.ordinal is not None:
        obj = ItemRef(ordinal=other_ordinal)
    else:
        obj = ItemRef(name=other.name)
    return QuerySemantics(INFORM_TF, subject=subject,
                          predicates=(Predicate(spec.name, rng.choice((LESS_THAN, MORE_THAN)),
                                      obj),))


def _items_with(ctx: ReasoningContext, *attrs: str) -> list:
    return [item for item in ctx.items if all(item.has(a) for a in attrs)]


def _straddle_pred(spec: AttributeSpec, value: float, rng: random.Random) -> Predicate | None:
    """Explicit numeric predicate satisfied by the given value."""
    if rng.random() < 0.5:
        t = _grid(spec, rng, lo=value + _step(spec))
        if t is not None:
            return Predicate(spec.name, LESS_THAN, _explicit_num(spec, t))
    t = _grid(spec, rng, hi=value - _step(spec))
    if t is not None:
        return Predicate(spec.name, MORE_THAN, _explicit_num(spec, t))
    t = _grid(spec, rng, lo=value + _step(spec))
    if t is not None:
        return Predicate(spec.name, LESS_THAN, _explicit_num(spec, t))
    return None


def _sample_answerable(ctx: ReasoningContext, onto: Ontology, rng: random.Random,
                       settings: QueryGenSettings,
                       target_attributes: int | None) -> QuerySemantics | None:
    if ctx.k == 0:
        return None
    n = target_attributes or (2 if (settings.max_attributes >= 2 and rng.random() < 0.3) else 1)
    numeric = [s for s in onto.numeric_attributes() if _carriers(ctx, s.name)]
    if n == 1:
        options = []
        if numeric:
            options += ["tf", "tf", "sup", "sup", "num_sat", "equal_sat"]
        options += ["cat_sat"]
        rng.shuffle(options)
        for kind in options:
            if kind == "tf":
                q = _sample_tf(ctx, onto, rng)
                if q is not None:
                    return q
            elif kind == "sup":
                spec = rng.choice(numeric)
                return QuerySemantics(_open_or_select(rng),
                                      predicates=(Predicate(spec.name, rng.choice((MIN, MAX))),))
            elif kind == "num_sat":
                pred = _sat_numeric_pred(ctx, rng.choice(numeric), rng)
                if pred is not None:
                    return QuerySemantics(_open_or_select(rng), predicates=(pred,))
            elif kind == "equal_sat":
                spec = rng.choice(numeric)
                values = _carrier_values(ctx, spec.name)
                return QuerySemantics(INFORM_OPEN, predicates=(
                    Predicate(spec.name, EQUAL, _explicit_num(spec, rng.choice(values))),))
            else:
                cats = list(onto.categorical_attributes())
                rng.shuffle(cats)
                for spec in cats:
                    pred = _sat_cat_pred(ctx, spec, settings, rng)
                    if pred is not None:
                        return QuerySemantics(_open_or_select(rng), predicates=(pred,))
        return None

    # two attributes: superlative + filter, or a satisfiable conjunction
    choices = ["sup_filter", "conj"] if numeric else ["conj"]
    rng.shuffle(choices)
    for kind in choices:
        if kind == "sup_filter":
            specs = list(numeric)
            rng.shuffle(specs)
            for spec in specs:
                others = [o for o in onto.attributes if o.name != spec.name]
                rng.shuffle(others)
                for other in others:
                    anchors = _items_with(ctx, spec.name, other.name)
                    if not anchors:
                        continue
                    anchor = rng.choice(anchors)
                    if other.kind == CATEGORICAL:
                        partner = Predicate(other.name, INCLUDE,
                                            _token_operand(anchor.values[other.name]))
                    else:
                        partner = _straddle_pred(other, anchor.values[other.name], rng)
                        if partner is None:
                            continue
                    return QuerySemantics(_open_or_select(rng), predicates=(
                        Predicate(spec.name, rng.choice((MIN, MAX))), partner))
        else:
            attrs = list(onto.attributes)
            rng.shuffle(attrs)
            for i, a in enumerate(attrs):
                for b in attrs[i + 1:]:
                    anchors = _items_with(ctx, a.name, b.name)
                    if not anchors:
                        continue
                    anchor = rng.choice(anchors)
                    preds = []
                    for spec in (a, b):
                        if spec.kind == CATEGORICAL:
                            preds.append(Predicate(spec.name, INCLUDE,
                                                   _token_operand(anchor.values[spec.name])))
                        else:
                            pred = _straddle_pred(spec, anchor.values[spec.name], rng)
                            if pred is None:
                                break
                            preds.append(pred)
                    if len(preds) == 2:
                        return QuerySemantics(_open_or_select(rng), predicates=tuple(preds))
    return None


def _sample_extract(ctx: ReasoningContext, onto: Ontology, rng: random.Random,
                    settings: QueryGenSettings,
                    target_attributes: int | None) -> QuerySemantics | None:
    n = target_attributes or (2 if (settings.max_attributes >= 2 and rng.random() < 0.3) else 1)
    numeric = list(onto.numeric_attributes())
    categorical = list(onto.categorical_attributes())

    def unsat_single(spec) -> Predicate | None:
        if spec.kind == NUMERIC:
            return _unsat_numeric_pred(ctx, spec, rng)
        return _unsat_cat_pred(ctx, spec, settings, rng)

    if ctx.k == 0:
        # every explicit filter extracts over an empty context
        if n == 1:
            spec = rng.choice(list(onto.attributes))
            if spec.kind == NUMERIC:
                op = rng.choice((LESS_THAN, MORE_THAN, EQUAL))
                pred = Predicate(spec.name, op, _explicit_num(spec, _threshold(spec, rng)))
            else:
                op = rng.choice((INCLUDE, EXCLUDE))
                pred = Predicate(spec.name, op, _token_operand(rng.choice(_pool(settings, spec))))
            return QuerySemantics(INFORM_OPEN, predicates=(pred,))
        attrs = rng.sample(list(onto.attributes), 2)
        preds = []
        for spec in attrs:
            if spec.kind == NUMERIC:
                preds.append(Predicate(spec.name, rng.choice((LESS_THAN, MORE_THAN)),
                                       _explicit_num(spec, _threshold(spec, rng))))
            else:
                preds.append(Predicate(spec.name, rng.choice((INCLUDE, EXCLUDE)),
                                       _token_operand(rng.choice(_pool(settings, spec)))))
        return QuerySemantics(INFORM_OPEN, predicates=tuple(preds))

    carriers_numeric = [s for s in numeric if _carriers(ctx, s.name)]
    if n == 1:
        options = []
        if carriers_numeric:
            options += ["ctxrel", "ctxrel", "num_unsat", "equal_miss"]
        options += ["incl_absent"]
        rng.shuffle(options)
        for kind in options:
            if kind == "ctxrel":
                spec = rng.choice(carriers_numeric)
                return QuerySemantics(INFORM_OPEN, predicates=(
                    Predicate(spec.name, rng.choice((LESS_THAN, MORE_THAN)),
                              ContextRelative()),))
            if kind == "num_unsat":
                pred = _unsat_numeric_pred(ctx, rng.choice(numeric), rng)
                if pred is not None:
                    return QuerySemantics(_open_or_select(rng), predicates=(pred,))
            elif kind == "equal_miss":
                spec = rng.choice(carriers_numeric)
                values = set(_carrier_values(ctx, spec.name))
                for _ in range(20):
                    t = _threshold(spec, rng)
                    if t not in values:
                        return QuerySemantics(INFORM_OPEN, predicates=(
                            Predicate(spec.name, EQUAL, _explicit_num(spec, t)),))
            else:
                cats = list(categorical)
                rng.shuffle(cats)
                for spec in cats:
                    pred = _unsat_cat_pred(ctx, spec, settings, rng)
                    if pred is not None:
                        return QuerySemantics(_open_or_select(rng), predicates=(pred,))
        return None

    options = []
    if len(carriers_numeric) >= 2:
        options.append("ctxrel_pair")
    if carriers_numeric and categorical:
        options += ["ctxrel_unsat", "sup_fallthrough"]
    options += ["conj_unsat"]
    rng.shuffle(options)
    for kind in options:
        if kind == "ctxrel_pair":
            a, b = rng.sample(carriers_numeric, 2)
            return QuerySemantics(INFORM_OPEN, predicates=(
                Predicate(a.name, rng.choice((LESS_THAN, MORE_THAN)), ContextRelative()),
                Predicate(b.name, rng.choice((LESS_THAN, MORE_THAN)), ContextRelative())))
        if kind in ("ctxrel_unsat", "sup_fallthrough"):
            spec = rng.choice(carriers_numeric)
            cats = list(categorical)
            rng.shuffle(cats)
            partner = None
            for cat in cats:
                partner = _unsat_cat_pred(ctx, cat, settings, rng)
                if partner is not None:
                    break
            if partner is None:
                continue
            if kind == "ctxrel_unsat":
                return QuerySemantics(INFORM_OPEN, predicates=(
                    Predicate(spec.name, rng.choice((LESS_THAN, MORE_THAN)),
                              ContextRelative()), partner))
            return QuerySemantics(_open_or_select(rng), predicates=(
                Predicate(spec.name, rng.choice((MIN, MAX))), partner))
        # conjunction whose explicit part is unsatisfiable as a whole
        attrs = list(onto.attributes)
        rng.shuffle(attrs)
        for i, a in enumerate(attrs):
            unsat = unsat_single(a)
            if unsat is None:
                continue
            for b in attrs:
                if b.name == a.name:
                    continue
                if b.kind == NUMERIC:
                    partner = Predicate(b.name, rng.choice((LESS_THAN, MORE_THAN)),
                                        _explicit_num(b, _threshold(b, rng)))
                else:
                    tokens = _present_tokens(ctx, b) or list(_pool(settings, b))
                    partner = Predicate(b.name, rng.choice((INCLUDE, EXCLUDE)),
                                        _token_operand(rng.choice(tokens)))
                pair = [unsat, partner]
                rng.shuffle(pair)
                return QuerySemantics(_open_or_select(rng), predicates=tuple(pair))
    return None
