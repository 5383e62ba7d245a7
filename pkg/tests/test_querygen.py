import random

import pytest

from dialoracle.catalog import Item
from dialoracle.contextgen import assemble_context
from dialoracle.oracle import Constraints, derive_gold
from dialoracle.querygen import (ANSWERABLE, EXTRACT, INFORM_OPEN, INFORM_TF,
                                 NO_REASON, NO_REASON_QUERY, SELECT,
                                 ContextRelative, ExplicitValue, ItemRef,
                                 Predicate, QueryGenSettings, QuerySemantics,
                                 canonical_lexical, enumerate_applicable_queries,
                                 load_templates, parse_query, realize_surface,
                                 sample_query, with_spoken)


def apples(onto, *, with_diet=True):
    values = lambda p, r: {"price": p, "rating": r, **({"diet": "organic"} if with_diet else {})}
    items = [
        Item("Organic Honeycrisp Apple", "apple", values(3.99, 4.1)),
        Item("Organic Gala Apple", "apple", values(2.49, 4.4)),
        Item("Organic Pink Lady Apple", "apple", values(3.55, 3.9)),
    ]
    return assemble_context(items, "I", onto, random.Random(1))


def test_enumeration_k0_has_no_tf_or_select(onto, make_ctx):
    ctx = make_ctx(k=0)
    queries = enumerate_applicable_queries(ctx, onto)
    actions = {q.action for q in queries}
    assert INFORM_TF not in actions
    assert SELECT not in actions
    assert NO_REASON in actions
    for q in queries:
        for pred in q.predicates:
            assert isinstance(pred.operand, ExplicitValue)


def test_enumeration_includes_tf_superlative(onto):
    ctx = apples(onto)
    queries = enumerate_applicable_queries(ctx, onto)
    expected = QuerySemantics(INFORM_TF, subject=ItemRef(ordinal=1),
                              predicates=(Predicate("price", "min"),))
    assert expected in queries
    by_name = QuerySemantics(INFORM_TF, subject=ItemRef(name=ctx.items[0].name),
                             predicates=(Predicate("price", "min"),))
    assert by_name in queries


def test_enumeration_includes_conjunction(onto):
    ctx = apples(onto)
    queries = enumerate_applicable_queries(ctx, onto)
    assert any(len(q.predicates) == 2 and q.predicates[0].op in ("min", "max")
               for q in queries)


def test_enumeration_respects_max_attributes(onto):
    ctx = apples(onto)
    queries = enumerate_applicable_queries(ctx, onto, QueryGenSettings(max_attributes=1))
    assert all(len(q.predicates) <= 1 for q in queries)


def test_enumeration_deterministic_by_default(onto):
    ctx = apples(onto)
    assert enumerate_applicable_queries(ctx, onto) == enumerate_applicable_queries(ctx, onto)


def test_applicability_guards(onto):
    # one item without rating: no rating TF/comparative should reference it
    items = [Item("Milk Solo", "milk", {"price": 5.0})]
    ctx = assemble_context(items, "I", onto, random.Random(0))
    queries = enumerate_applicable_queries(ctx, onto)
    for q in queries:
        if q.action == INFORM_TF:
            assert q.predicates[0].attribute == "price"


def test_parse_published_examples(onto):
    q = parse_query("Which one is the cheapest?", onto)
    assert q == QuerySemantics(INFORM_OPEN, predicates=(Predicate("price", "min"),))

    q = parse_query("Add the cheapest to my cart.", onto)
    assert q == QuerySemantics(SELECT, predicates=(Predicate("price", "min"),))

    q = parse_query("I don't want mango.", onto)
    assert q == QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("flavor", "exclude", ExplicitValue("mango", "mango")),))

    q = parse_query("I don't want anything vegan.", onto)
    assert q == QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("diet", "exclude", ExplicitValue("vegan", "vegan")),))

    q = parse_query("Give me something vegan.", onto)
    assert q == QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("diet", "include", ExplicitValue("vegan", "vegan")),))

    q = parse_query("It should cost $1.50.", onto)
    assert q == QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("price", "equal", ExplicitValue(1.50, "1.50")),))

    q = parse_query("I want something cheaper than $5.", onto)
    assert q == QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("price", "less-than", ExplicitValue(5.0, "5")),))

    q = parse_query("Anything more popular?", onto)
    assert q == QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("rating", "more-than", ContextRelative()),))

    q = parse_query("Is the first one cheaper than the second one?", onto)
    assert q == QuerySemantics(
        INFORM_TF, subject=ItemRef(ordinal=1),
        predicates=(Predicate("price", "less-than", ItemRef(ordinal=2)),))

    q = parse_query("Which is the cheapest one and doesn't have strawberry?", onto)
    assert q == QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("price", "min"),
        Predicate("flavor", "exclude", ExplicitValue("strawberry", "strawberry"))))


def test_parse_spoken_numerals(onto):
    q = parse_query("I want something cheaper than five dollars.", onto)
    assert q == QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("price", "less-than", ExplicitValue(5.0, "5")),), spoken=True)
    q = parse_query("Is the first one higher rated than four point five?", onto)
    assert q.spoken and q.predicates[0].operand.lexical == "4.5"


def test_parse_fallback_is_no_reason(onto):
    assert parse_query("Please repeat", onto) == NO_REASON_QUERY
    assert parse_query("complete gibberish goes here", onto) == NO_REASON_QUERY
    assert parse_query("", onto) == NO_REASON_QUERY


def test_parse_is_case_insensitive(onto):
    q = parse_query("WHICH ONE IS THE CHEAPEST?", onto)
    assert q == QuerySemantics(INFORM_OPEN, predicates=(Predicate("price", "min"),))


def test_parse_tolerates_missing_terminal_punctuation(onto):
    q = parse_query("Add the highest rated one to my cart", onto)
    assert q == QuerySemantics(SELECT, predicates=(Predicate("rating", "max"),))


def test_no_reason_pool_parses_to_no_reason(onto):
    pool = load_templates().no_reason_pool
    assert len(pool) >= 40
    for utterance in pool:
        assert parse_query(utterance, onto) == NO_REASON_QUERY, utterance


def test_realize_uses_template_variations(onto):
    q = QuerySemantics(SELECT, predicates=(Predicate("price", "min"),))
    surfaces = {realize_surface(q, onto, random.Random(s)) for s in range(40)}
    assert "Add the cheapest to my cart." in surfaces
    assert len(surfaces) >= 2  # variation actually varies


def test_realize_spoken_converts_numerals(onto):
    q = QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("price", "less-than", ExplicitValue(5.0, "5")),), spoken=True)
    surfaces = {realize_surface(q, onto, random.Random(s)) for s in range(20)}
    assert any("five dollars" in s for s in surfaces)
    assert all("$" not in s for s in surfaces)


def test_round_trip_over_enumeration(onto, make_ctx):
    rng = random.Random(77)
    checked = 0
    for seed in range(12):
        ctx = make_ctx(k=seed % 6, case="I", seed=seed)
        for q in enumerate_applicable_queries(ctx, onto, rng=random.Random(seed)):
            if rng.random() < 0.35:
                q = with_spoken(q)
            surface = realize_surface(q, onto, rng)
            assert parse_query(surface, onto) == q, surface
            checked += 1
    assert checked > 1500


def test_with_spoken_only_marks_numeral_queries():
    no_numeral = QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("diet", "include", ExplicitValue("vegan", "vegan")),))
    assert with_spoken(no_numeral).spoken is False
    numeral = QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("price", "less-than", ExplicitValue(2.0, "2")),))
    assert with_spoken(numeral).spoken is True


def test_canonical_lexical(onto):
    price = onto.attribute("price")
    rating = onto.attribute("rating")
    assert canonical_lexical(price, 2.0) == "2"
    assert canonical_lexical(price, 3.5) == "3.50"
    assert canonical_lexical(rating, 4.5) == "4.5"
    assert canonical_lexical(rating, 4.0) == "4"


def test_sample_query_honors_targets(onto, make_ctx):
    rng = random.Random(5)
    for trial in range(400):
        k = rng.randint(0, 5)
        ctx = make_ctx(k=k, seed=trial)
        target_class = rng.choice([ANSWERABLE, EXTRACT])
        if target_class == ANSWERABLE and k == 0:
            continue
        n = rng.choice([1, 2])
        q = sample_query(ctx, onto, rng, target_class=target_class,
                         target_attributes=n)
        if q is None:
            continue
        assert len(q.predicates) == n
        gold = derive_gold(ctx, q)
        is_extract = isinstance(gold, Constraints)
        assert is_extract == (target_class == EXTRACT)


def test_sampled_queries_never_break_the_oracle(onto, make_ctx):
    rng = random.Random(6)
    for trial in range(600):
        ctx = make_ctx(k=rng.randint(0, 5), seed=1000 + trial)
        q = sample_query(ctx, onto, rng)
        assert q is not None
        derive_gold(ctx, q)  # must not raise


def test_extraction_queries_unsatisfiable(onto, make_ctx):
    # whenever extraction is targeted, the explicit subset matches nothing
    from dialoracle.oracle import filter_items
    rng = random.Random(8)
    for trial in range(300):
        k = rng.randint(0, 5)
        ctx = make_ctx(k=k, seed=2000 + trial)
        q = sample_query(ctx, onto, rng, target_class=EXTRACT)
        if q is None:
            continue
        explicit = [p for p in q.predicates
                    if isinstance(p.operand, ExplicitValue) and p.op != "equal"]
        if explicit and len(explicit) == len(q.predicates):
            assert filter_items(ctx, explicit) == []
