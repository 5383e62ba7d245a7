"""Attribute schema, value spaces and surface lexicons behind all generation.

An ontology is loaded once from a YAML document (see data/default_ontology.yaml
for the documented schema) and is immutable afterwards, so it can be shared
freely across parallel generation workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

import yaml

from .errors import OntologyError

ONTOLOGY_SCHEMA_VERSION = 1

NUMERIC = "numeric"
CATEGORICAL = "categorical"
LOWER = "lower"
HIGHER = "higher"
INCLUDE = "include"
EXCLUDE = "exclude"

_NAME_PATTERNS = ("type-brand", "brand-type")


@dataclass(frozen=True)
class Lexicon:
    """Surface vocabulary of one attribute.

    comparative/superlative map direction -> ordered phrases ("cheaper",
    "the most popular", ...). The inclusion fields hold sentence patterns for
    categorical want/not-want with a ``{value}`` slot, both standalone
    ("I don't want {value}.") and as a clause usable in conjunctions
    ("doesn't have {value}").
    """

    comparative: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    superlative: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    include_patterns: tuple[str, ...] = ()
    exclude_patterns: tuple[str, ...] = ()
    include_clauses: tuple[str, ...] = ()
    exclude_clauses: tuple[str, ...] = ()

    def phrase_directions(self, kind: str) -> dict[str, str]:
        """Map each phrase of the given kind to its direction."""
        table = self.comparative if kind == "comparative" else self.superlative
        out: dict[str, str] = {}
        for direction, phrases in table.items():
            for p in phrases:
                out[p] = direction
        return out


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: str  # numeric | categorical
    minimum: float | None = None
    maximum: float | None = None
    decimals: int = 0
    bounded: bool = True
    unit: str | None = None  # None | "currency"
    values: tuple[str, ...] = ()
    lexicon: Lexicon = field(default_factory=Lexicon)

    def format_value(self, value: float | str) -> str:
        if self.kind == CATEGORICAL:
            return str(value)
        return f"{float(value):.{self.decimals}f}"

    def grid_step(self) -> float:
        return 10 ** -self.decimals


@dataclass(frozen=True, eq=False)  # identity hash: instances are shared, not compared
class Ontology:
    item_types: tuple[str, ...]
    attributes: tuple[AttributeSpec, ...]
    attribute_presence_probability: float = 0.9
    item_name_pattern: str = "type-brand"
    schema_version: int = ONTOLOGY_SCHEMA_VERSION

    def attribute(self, name: str) -> AttributeSpec:
        for spec in self.attributes:
            if spec.name == name:
                return spec
        raise OntologyError(f"unknown attribute {name!r}", "attributes")

    def has_attribute(self, name: str) -> bool:
        return any(spec.name == name for spec in self.attributes)

    def numeric_attributes(self) -> tuple[AttributeSpec, ...]:
        return tuple(a for a in self.attributes if a.kind == NUMERIC)

    def categorical_attributes(self) -> tuple[AttributeSpec, ...]:
        return tuple(a for a in self.attributes if a.kind == CATEGORICAL)

    def token_attribute(self, token: str) -> AttributeSpec | None:
        """Categorical attribute owning a value token, if any."""
        for spec in self.categorical_attributes():
            if token in spec.values:
                return spec
        return None


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    path: str
    message: str


def _require(mapping: Any, key: str, path: str) -> Any:
    if not isinstance(mapping, dict):
        raise OntologyError("expected a mapping", path)
    if key not in mapping:
        raise OntologyError(f"missing required field {key!r}", path)
    return mapping[key]


def _phrases(raw: Any, path: str) -> tuple[str, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list) or not all(isinstance(p, str) for p in raw):
        raise OntologyError("expected a list of strings", path)
    return tuple(raw)


def _load_lexicon(raw: Any, kind: str, path: str) -> Lexicon:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise OntologyError("expected a mapping", path)
    if kind == NUMERIC:
        comp = raw.get("comparative") or {}
        sup = raw.get("superlative") or {}
        comparative = {
            d: _phrases(comp.get(d), f"{path}.comparative.{d}") for d in (LOWER, HIGHER)
        }
        superlative = {
            d: _phrases(sup.get(d), f"{path}.superlative.{d}") for d in (LOWER, HIGHER)
        }
        return Lexicon(comparative=comparative, superlative=superlative)
    inc = raw.get("inclusion") or {}
    return Lexicon(
        include_patterns=_phrases(inc.get("include"), f"{path}.inclusion.include"),
        exclude_patterns=_phrases(inc.get("exclude"), f"{path}.inclusion.exclude"),
        include_clauses=_phrases(inc.get("include_clause"), f"{path}.inclusion.include_clause"),
        exclude_clauses=_phrases(inc.get("exclude_clause"), f"{path}.inclusion.exclude_clause"),
    )


def _load_values(raw_attr: dict, path: str) -> tuple[str, ...]:
    values = raw_attr.get("values")
    compose = raw_attr.get("compose")
    if values is not None and compose is not None:
        raise OntologyError("give either 'values' or 'compose', not both", path)
    if values is not None:
        if not isinstance(values, list) or not values:
            raise OntologyError("value catalog must be a non-empty list", f"{path}.values")
        return tuple(str(v) for v in values)
    if compose is None:
        raise OntologyError("categorical attribute needs 'values' or 'compose'", path)
    modifiers = _phrases(_require(compose, "modifiers", f"{path}.compose"),
                         f"{path}.compose.modifiers")
    bases = _phrases(_require(compose, "bases", f"{path}.compose"),
                     f"{path}.compose.bases")
    joiner = compose.get("joiner", "-")
    include_bases = bool(compose.get("include_bases", False))
    out: list[str] = list(bases) if include_bases else []
    out.extend(f"{m}{joiner}{b}" for m in modifiers for b in bases)
    return tuple(out)


def _load_attribute(raw: Any, path: str) -> AttributeSpec:
    name = _require(raw, "name", path)
    kind = _require(raw, "kind", path)
    if kind not in (NUMERIC, CATEGORICAL):
        raise OntologyError(f"unrecognized kind {kind!r}", f"{path}.kind")
    lexicon = _load_lexicon(raw.get("lexicon"), kind, f"{path}.lexicon")
    if kind == NUMERIC:
        rng = _require(raw, "range", path)
        if not (isinstance(rng, list) and len(rng) == 2):
            raise OntologyError("range must be [min, max]", f"{path}.range")
        minimum, maximum = float(rng[0]), float(rng[1])
        if not minimum < maximum:
            raise OntologyError(f"inverted range [{minimum}, {maximum}]", f"{path}.range")
        decimals = int(raw.get("decimals", 0))
        if decimals not in (0, 1, 2):
            raise OntologyError(f"decimals must be 0, 1 or 2, got {decimals}",
                                f"{path}.decimals")
        unit = raw.get("unit")
        if unit not in (None, "currency"):
            raise OntologyError(f"unrecognized unit {unit!r}", f"{path}.unit")
        return AttributeSpec(
            name=name, kind=kind, minimum=minimum, maximum=maximum,
            decimals=decimals, bounded=bool(raw.get("bounded", True)),
            unit=unit, lexicon=lexicon,
        )
    values = _load_values(raw, path)
    seen: set[str] = set()
    for v in values:
        if v in seen:
            raise OntologyError(f"duplicate value token {v!r}", f"{path}.values")
        seen.add(v)
    return AttributeSpec(name=name, kind=kind, values=values, lexicon=lexicon)


def load_ontology(document: str) -> Ontology:
    """Parse and validate a YAML ontology document.

    Raises OntologyError (with a field path) on structural problems or any
    error-severity invariant violation; warnings are left to
    validate_ontology.
    """
    try:
        raw = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise OntologyError(f"malformed document: {exc}") from None
    if not isinstance(raw, dict):
        raise OntologyError("document root must be a mapping")
    version = raw.get("schema_version")
    if version != ONTOLOGY_SCHEMA_VERSION:
        raise OntologyError(
            f"unsupported schema_version {version!r} (expected {ONTOLOGY_SCHEMA_VERSION})",
            "schema_version")
    item_types = _phrases(_require(raw, "item_types", "item_types"), "item_types")
    if not item_types:
        raise OntologyError("at least one item type required", "item_types")
    raw_attrs = _require(raw, "attributes", "attributes")
    if not isinstance(raw_attrs, list) or not raw_attrs:
        raise OntologyError("at least one attribute required", "attributes")
    attributes = tuple(
        _load_attribute(a, f"attributes[{i}]") for i, a in enumerate(raw_attrs)
    )
    presence = float(raw.get("attribute_presence_probability", 0.9))
    if not 0 < presence <= 1:
        raise OntologyError(f"presence probability {presence} outside (0, 1]",
                            "attribute_presence_probability")
    pattern = raw.get("item_name_pattern", "type-brand")
    if pattern not in _NAME_PATTERNS:
        raise OntologyError(f"unrecognized pattern {pattern!r} (one of {_NAME_PATTERNS})",
                            "item_name_pattern")
    onto = Ontology(
        item_types=item_types,
        attributes=attributes,
        attribute_presence_probability=presence,
        item_name_pattern=pattern,
    )
    errors = [d for d in validate_ontology(onto) if d.severity == "error"]
    if errors:
        first = errors[0]
        raise OntologyError(first.message, first.path)
    return onto


def load_ontology_path(path: str) -> Ontology:
    with open(path, "r", encoding="utf-8") as fh:
        return load_ontology(fh.read())


def default_ontology() -> Ontology:
    """The shipped shopping-assistant ontology (price/rating/diet/flavor)."""
    text = resources.files("dialoracle.data").joinpath("default_ontology.yaml").read_text("utf-8")
    return load_ontology(text)


def validate_ontology(onto: Ontology) -> list[Diagnostic]:
    """Check every type invariant; empty list means fully valid.

    Error diagnostics break generation soundness; warnings flag reduced
    scenario coverage (e.g. no numeric attribute means true/false
    comparative queries are unavailable).
    """
    out: list[Diagnostic] = []
    seen_names: set[str] = set()
    phrase_owner: dict[str, str] = {}
    for i, spec in enumerate(onto.attributes):
        path = f"attributes[{i}]"
        if spec.name in seen_names:
            out.append(Diagnostic("error", f"{path}.name",
                                  f"duplicate attribute name {spec.name!r}"))
        seen_names.add(spec.name)
        if spec.kind == NUMERIC:
            if spec.minimum is None or spec.maximum is None or not spec.minimum < spec.maximum:
                out.append(Diagnostic("error", f"{path}.range",
                                      f"inverted or missing range for {spec.name!r}"))
            if spec.decimals not in (0, 1, 2):
                out.append(Diagnostic("error", f"{path}.decimals",
                                      f"decimals {spec.decimals} outside {{0,1,2}}"))
            for kind_name, table in (("comparative", spec.lexicon.comparative),
                                     ("superlative", spec.lexicon.superlative)):
                seen_phrases: dict[str, str] = {}
                for direction in (LOWER, HIGHER):
                    phrases = table.get(direction, ())
                    if not phrases:
                        out.append(Diagnostic(
                            "error", f"{path}.lexicon.{kind_name}.{direction}",
                            f"{spec.name!r} needs at least one {direction} "
                            f"{kind_name} phrase"))
                    for p in phrases:
                        if p in seen_phrases:
                            out.append(Diagnostic(
                                "error", f"{path}.lexicon.{kind_name}",
                                f"phrase {p!r} mapped to both directions"))
                        seen_phrases[p] = direction
                        owner = phrase_owner.get(p)
                        if owner is not None and owner != spec.name:
                            out.append(Diagnostic(
                                "error", f"{path}.lexicon.{kind_name}",
                                f"phrase {p!r} already used by attribute {owner!r}"))
                        phrase_owner[p] = spec.name
        else:
            if not spec.values:
                out.append(Diagnostic("error", f"{path}.values",
                                      f"{spec.name!r} has an empty value catalog"))
            if len(set(spec.values)) != len(spec.values):
                out.append(Diagnostic("error", f"{path}.values",
                                      f"{spec.name!r} has duplicate value tokens"))
            if not spec.lexicon.include_patterns or not spec.lexicon.exclude_patterns:
                out.append(Diagnostic("error", f"{path}.lexicon.inclusion",
                                      f"{spec.name!r} needs include and exclude patterns"))
            if not spec.lexicon.include_clauses or not spec.lexicon.exclude_clauses:
                out.append(Diagnostic("error", f"{path}.lexicon.inclusion",
                                      f"{spec.name!r} needs include and exclude clauses"))
    # cross-catalog token overlap makes query parses ambiguous
    token_owner: dict[str, str] = {}
    for spec in onto.categorical_attributes():
        for tok in spec.values:
            owner = token_owner.get(tok)
            if owner is not None:
                out.append(Diagnostic("warning", "attributes",
                                      f"token {tok!r} appears in both {owner!r} "
                                      f"and {spec.name!r}; parses resolve to {owner!r}"))
            else:
                token_owner[tok] = spec.name
    if not onto.numeric_attributes():
        out.append(Diagnostic("warning", "attributes",
                              "no numeric attribute: T/F comparative queries unavailable"))
    if not onto.categorical_attributes():
        out.append(Diagnostic("warning", "attributes",
                              "no categorical attribute: include/exclude queries unavailable"))
    return out


def surface_forms(onto: Ontology, attribute: str, phrase_kind: str,
                  direction: str) -> list[str]:
    """Deterministically ordered surface phrases for one attribute.

    phrase_kind is comparative/superlative (numeric, direction lower/higher)
    or inclusion (categorical, direction include/exclude).
    """
    spec = onto.attribute(attribute)
    if phrase_kind in ("comparative", "superlative"):
        if spec.kind != NUMERIC:
            raise OntologyError(f"{phrase_kind} undefined on categorical attribute "
                                f"{attribute!r}", attribute)
        if direction not in (LOWER, HIGHER):
            raise OntologyError(f"unknown direction {direction!r}", attribute)
        table = spec.lexicon.comparative if phrase_kind == "comparative" \
            else spec.lexicon.superlative
        return list(table.get(direction, ()))
    if phrase_kind == "inclusion":
        if spec.kind != CATEGORICAL:
            raise OntologyError(f"inclusion undefined on numeric attribute "
                                f"{attribute!r}", attribute)
        if direction == INCLUDE:
            return list(spec.lexicon.include_patterns)
        if direction == EXCLUDE:
            return list(spec.lexicon.exclude_patterns)
        raise OntologyError(f"unknown direction {direction!r}", attribute)
    raise OntologyError(f"unknown phrase kind {phrase_kind!r}", attribute)
