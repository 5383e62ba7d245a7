"""Split-disjoint item catalogs and same-type context sampling.

Item names are drawn from a synthesized brand pool partitioned across
train/dev/test so the splits never share a name. Categorical value pools are
likewise partitioned when large enough (flavor), and shared when a three-way
split would be meaningless (diet's pool of 10).
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import CatalogError
from .ontology import CATEGORICAL, NUMERIC, AttributeSpec, Ontology

SPLITS = ("train", "dev", "test")

# pools with fewer than this many tokens per split stay shared
MIN_SPLIT_POOL = 10

# brand-name fragments; 30 * 15 * 24 = 10,800 distinct brands
_BRAND_STARTS = [
    "An", "Bel", "Cal", "Dor", "El", "Fen", "Gal", "Hel", "Is", "Jor",
    "Kel", "Lor", "Mar", "Nor", "Or", "Pel", "Quil", "Ros", "Sel", "Tor",
    "Ul", "Vel", "Wen", "Xan", "Yor", "Zel", "Bran", "Col", "Del", "Fal",
]
_BRAND_MIDS = [
    "a", "e", "i", "o", "u", "ar", "en", "il", "on", "ur",
    "is", "an", "el", "or", "um",
]
_BRAND_ENDS = [
    "dis", "ber", "cus", "dor", "fen", "gon", "kis", "lin", "mer", "nis",
    "pol", "rus", "sa", "tis", "vo", "wick", "zor", "mont", "field", "crest",
    "shire", "holm", "wood", "vale",
]


@dataclass(frozen=True)
class Item:
    name: str
    item_type: str
    values: Mapping[str, float | str]  # attribute name -> value (partial)

    def has(self, attribute: str) -> bool:
        return attribute in self.values


@dataclass(frozen=True)
class Catalog:
    split: str  # train | dev | test
    items: tuple[Item, ...]
    name_pool_fingerprint: str
    token_pools: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def by_type(self) -> dict[str, list[Item]]:
        out: dict[str, list[Item]] = {}
        for item in self.items:
            out.setdefault(item.item_type, []).append(item)
        return out


def _brand_pool() -> list[str]:
    return [s + m + e for s in _BRAND_STARTS for m in _BRAND_MIDS for e in _BRAND_ENDS]


def _item_name(pattern: str, item_type: str, brand: str) -> str:
    if pattern == "brand-type":
        return f"{brand} {item_type.title()}"
    return f"{item_type.title()} {brand}"


def _numeric_value(spec: AttributeSpec, rng: random.Random) -> float:
    scale = 10 ** spec.decimals
    lo = round(spec.minimum * scale)
    hi = round(spec.maximum * scale)
    return rng.randint(lo, hi) / scale


def _split_token_pools(onto: Ontology, rng: random.Random) -> dict[str, dict[str, tuple[str, ...]]]:
    """Per-split value pools for categorical attributes."""
    pools: dict[str, dict[str, tuple[str, ...]]] = {s: {} for s in SPLITS}
    for spec in onto.categorical_attributes():
        tokens = list(spec.values)
        if len(tokens) >= MIN_SPLIT_POOL * len(SPLITS):
            rng.shuffle(tokens)
            third = len(tokens) // len(SPLITS)
            for i, split in enumerate(SPLITS):
                start = i * third
                end = start + third if i < len(SPLITS) - 1 else len(tokens)
                pools[split][spec.name] = tuple(tokens[start:end])
        else:
            for split in SPLITS:
                pools[split][spec.name] = tuple(tokens)
    return pools


def _fingerprint(names: Iterable[str]) -> str:
    digest = hashlib.sha256()
    for name in sorted(names):
        digest.update(name.encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def build_split_catalogs(onto: Ontology, sizes: Mapping[str, int] | tuple[int, int, int],
                         seed: int) -> dict[str, Catalog]:
    """Build train/dev/test catalogs with pairwise-disjoint item names.

    Deterministic for fixed (ontology, sizes, seed). Raises CatalogError when
    the requested sizes exceed the brand-pool capacity.
    """
    if not isinstance(sizes, Mapping):
        sizes = dict(zip(SPLITS, sizes))
    for split in SPLITS:
        if sizes.get(split, 0) < 1:
            raise CatalogError(f"split {split!r} needs at least 1 item")
    total = sum(sizes[s] for s in SPLITS)
    rng = random.Random(seed)
    brands = _brand_pool()
    if total > len(brands):
        raise CatalogError(
            f"requested {total} items but the name pool holds {len(brands)}")
    rng.shuffle(brands)
    token_pools = _split_token_pools(onto, rng)

    catalogs: dict[str, Catalog] = {}
    cursor = 0
    for split in SPLITS:
        count = sizes[split]
        split_brands = brands[cursor:cursor + count]
        cursor += count
        items = []
        for brand in split_brands:
            item_type = rng.choice(onto.item_types)
            values: dict[str, float | str] = {}
            for spec in onto.attributes:
                if rng.random() >= onto.attribute_presence_probability:
                    continue
                if spec.kind == NUMERIC:
                    values[spec.name] = _numeric_value(spec, rng)
                else:
                    values[spec.name] = rng.choice(token_pools[split][spec.name])
            items.append(Item(
                name=_item_name(onto.item_name_pattern, item_type, brand),
                item_type=item_type,
                values=values,
            ))
        catalogs[split] = Catalog(
            split=split,
            items=tuple(items),
            name_pool_fingerprint=_fingerprint(i.name for i in items),
            token_pools=token_pools[split],
        )
    return catalogs


def _collides(item: Item, chosen: list[Item], numeric_names: tuple[str, ...]) -> bool:
    for attr in numeric_names:
        value = item.values.get(attr)
        if value is None:
            continue
        for other in chosen:
            if other.values.get(attr) == value:
                return True
    return False


def sample_context_items(catalog: Catalog, k: int, rng: random.Random,
                         onto: Ontology, max_retries: int = 8) -> list[Item]:
    """Sample k same-type items whose numeric values are pairwise distinct.

    The returned order is the sampling order. k=0 yields an empty list
    (constraint-extraction-only contexts). Raises CatalogError when no item
    type can field k collision-free items.
    """
    if k == 0:
        return []
    numeric_names = tuple(a.name for a in onto.numeric_attributes())
    groups = catalog.by_type()
    feasible = [t for t, items in groups.items() if len(items) >= k]
    if not feasible:
        raise CatalogError(f"no item type has {k} items in the {catalog.split} catalog")
    rng.shuffle(feasible)
    for item_type in feasible:
        pool = groups[item_type]
        for _ in range(max_retries):
            candidates = rng.sample(pool, len(pool)) if len(pool) <= 4 * k \
                else rng.sample(pool, 4 * k)
            chosen: list[Item] = []
            for item in candidates:
                if not _collides(item, chosen, numeric_names):
                    chosen.append(item)
                    if len(chosen) == k:
                        return chosen
    raise CatalogError(
        f"could not sample {k} items with distinct numeric values from the "
        f"{catalog.split} catalog")


def write_items(catalog: Catalog, path: str) -> None:
    """Export one item per line for inspection and reuse."""
    with open(path, "w", encoding="utf-8") as fh:
        for item in catalog.items:
            record = {"split": catalog.split, "name": item.name,
                      "type": item.item_type, "values": dict(item.values)}
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


def read_items(path: str) -> Catalog:
    """Inverse of write_items; token pools are rebuilt from observed values."""
    items: list[Item] = []
    split = "train"
    observed: dict[str, set[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                split = record["split"]
                items.append(Item(name=record["name"], item_type=record["type"],
                                  values=record["values"]))
            except (json.JSONDecodeError, KeyError) as exc:
                raise CatalogError(f"line {lineno}: bad item record ({exc})") from None
            for attr, value in record["values"].items():
                if isinstance(value, str):
                    observed.setdefault(attr, set()).add(value)
    return Catalog(
        split=split,
        items=tuple(items),
        name_pool_fingerprint=_fingerprint(i.name for i in items),
        token_pools={a: tuple(sorted(v)) for a, v in observed.items()},
    )
