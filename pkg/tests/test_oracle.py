import random

import pytest

from dialoracle.catalog import Item
from dialoracle.contextgen import assemble_context, parse_context
from dialoracle.errors import OracleError, OutputParseError
from dialoracle.oracle import (Constraint, Constraints, InformItems, InformTF,
                               NoAnswer, SelectItems, derive_gold, emit_output,
                               eval_true_false, extract_constraints,
                               filter_items, parse_output, resolve_superlative)
from dialoracle.querygen import (INFORM_OPEN, INFORM_TF, NO_REASON_QUERY,
                                 SELECT, ContextRelative, ExplicitValue,
                                 ItemRef, Predicate, QuerySemantics,
                                 enumerate_applicable_queries, parse_query)

from reference_oracle import reference_answer


def ctx_of(onto, items, case="I", seed=0):
    return assemble_context(items, case, onto, random.Random(seed))


@pytest.fixture
def apples_ctx(onto):
    # the three shopping-assistant apples plus the cheap follow-up option
    return ctx_of(onto, [
        Item("Organic Honeycrisp Apple", "apple", {"price": 3.99}),
        Item("Organic Gala Apple", "apple", {"price": 2.49}),
        Item("Organic Pink Lady Apple", "apple", {"price": 3.55}),
        Item("Fuji Apple", "apple", {"price": 1.89}),
    ])


@pytest.fixture
def grapes_ctx(onto):
    items = [
        Item("Red Seedless Grapes", "grape", {"rating": 4.5}),
        Item("Conventional Cut Grapes", "grape", {"rating": 4.3}),
    ]
    ctx = ctx_of(onto, items, seed=3)
    # pin ordinals to the dialogue's presentation order
    if ctx.ordinal_names[0] != "Red Seedless Grapes":
        ctx = ctx_of(onto, items, seed=1)
    assert ctx.ordinal_names[0] == "Red Seedless Grapes"
    return ctx


def test_filter_less_than_price(apples_ctx):
    names = filter_items(apples_ctx, [
        Predicate("price", "less-than", ExplicitValue(2.0, "2"))])
    assert names == ["Fuji Apple"]


def test_filter_empty_predicates_returns_all(apples_ctx):
    assert set(filter_items(apples_ctx, [])) == {i.name for i in apples_ctx.items}
    assert filter_items(apples_ctx, []) == [i.name for i in apples_ctx.items]


def test_filter_missing_attribute_never_satisfies(apples_ctx):
    names = filter_items(apples_ctx, [
        Predicate("diet", "include", ExplicitValue("vegan", "vegan"))])
    assert names == []
    # exclусion also requires the attribute to be present
    names = filter_items(apples_ctx, [
        Predicate("diet", "exclude", ExplicitValue("vegan", "vegan"))])
    assert names == []


def test_filter_item_ref_out_of_range(apples_ctx):
    with pytest.raises(Exception):
        filter_items(apples_ctx, [
            Predicate("price", "less-than", ItemRef(ordinal=9))])


def test_resolve_superlative(onto, apples_ctx):
    assert resolve_superlative(apples_ctx, "price", "min") == ["Fuji Apple"]
    assert resolve_superlative(apples_ctx, "price", "max") == ["Organic Honeycrisp Apple"]


def test_resolve_superlative_without_fuji(onto):
    ctx = ctx_of(onto, [
        Item("Organic Honeycrisp Apple", "apple", {"price": 3.99}),
        Item("Organic Gala Apple", "apple", {"price": 2.49}),
        Item("Organic Pink Lady Apple", "apple", {"price": 3.55}),
    ])
    assert resolve_superlative(ctx, "price", "min") == ["Organic Gala Apple"]


def test_resolve_superlative_with_prefilter(onto):
    ctx = ctx_of(onto, [
        Item("Yogurt A", "yogurt", {"price": 1.0, "flavor": "strawberry"}),
        Item("Yogurt B", "yogurt", {"price": 2.0, "flavor": "mango"}),
        Item("Yogurt C", "yogurt", {"price": 3.0, "flavor": "vanilla"}),
    ])
    pre = [Predicate("flavor", "exclude", ExplicitValue("strawberry", "strawberry"))]
    assert resolve_superlative(ctx, "price", "min", pre) == ["Yogurt B"]


def test_resolve_superlative_k1_both_directions(onto):
    ctx = ctx_of(onto, [Item("Solo Milk", "milk", {"price": 4.0})])
    assert resolve_superlative(ctx, "price", "min") == ["Solo Milk"]
    assert resolve_superlative(ctx, "price", "max") == ["Solo Milk"]


def test_resolve_superlative_no_carrier_errors(onto):
    ctx = ctx_of(onto, [Item("Solo Milk", "milk", {"price": 4.0})])
    with pytest.raises(OracleError):
        resolve_superlative(ctx, "rating", "min")


def test_tf_grapes_dialogue(grapes_ctx):
    # "Is the second one more popular?" -> No (4.3 vs 4.5)
    verdict = eval_true_false(grapes_ctx, ItemRef(ordinal=2),
                              Predicate("rating", "more-than", ItemRef(ordinal=1)))
    assert verdict is False
    verdict = eval_true_false(grapes_ctx, ItemRef(ordinal=2),
                              Predicate("rating", "more-than", ContextRelative()))
    assert verdict is False


def test_tf_explicit_value(apples_ctx):
    # "Does it cost less than two dollars?" about Fuji -> yes
    verdict = eval_true_false(apples_ctx, ItemRef(name="Fuji Apple"),
                              Predicate("price", "less-than", ExplicitValue(2.0, "2")))
    assert verdict is True


def test_tf_single_item_is_extreme(onto):
    ctx = ctx_of(onto, [Item("Solo Milk", "milk", {"price": 4.0})])
    assert eval_true_false(ctx, ItemRef(ordinal=1), Predicate("price", "min")) is True


def test_tf_missing_attribute_errors(onto):
    ctx = ctx_of(onto, [Item("Solo Milk", "milk", {"price": 4.0})])
    with pytest.raises(OracleError):
        eval_true_false(ctx, ItemRef(ordinal=1), Predicate("rating", "min"))


def test_inverse_relation_property(onto, make_ctx):
    rng = random.Random(4)
    for seed in range(60):
        ctx = make_ctx(k=rng.randint(2, 5), seed=seed)
        for spec in onto.numeric_attributes():
            carriers = [i + 1 for i, item in enumerate(ctx.items)
                        if item.has(spec.name)]
            for a in carriers:
                for b in carriers:
                    if a == b:
                        continue
                    less = eval_true_false(ctx, ItemRef(ordinal=a),
                                           Predicate(spec.name, "less-than",
                                                     ItemRef(ordinal=b)))
                    more = eval_true_false(ctx, ItemRef(ordinal=a),
                                           Predicate(spec.name, "more-than",
                                                     ItemRef(ordinal=b)))
                    assert less == (not more)


def test_transitivity_property(onto, make_ctx):
    rng = random.Random(9)
    for seed in range(40):
        ctx = make_ctx(k=rng.randint(3, 5), seed=100 + seed)
        for spec in onto.numeric_attributes():
            carriers = [i + 1 for i, item in enumerate(ctx.items)
                        if item.has(spec.name)]
            for a in carriers:
                for b in carriers:
                    for c in carriers:
                        if len({a, b, c}) != 3:
                            continue
                        ab = eval_true_false(ctx, ItemRef(ordinal=a),
                                             Predicate(spec.name, "less-than",
                                                       ItemRef(ordinal=b)))
                        bc = eval_true_false(ctx, ItemRef(ordinal=b),
                                             Predicate(spec.name, "less-than",
                                                       ItemRef(ordinal=c)))
                        if ab and bc:
                            assert eval_true_false(
                                ctx, ItemRef(ordinal=a),
                                Predicate(spec.name, "less-than",
                                          ItemRef(ordinal=c))) is True


def test_constraints_published_examples(onto, grapes_ctx):
    # "Anything more popular?" over ratings {4.5, 4.3} -> more-than rating 4.5
    out = extract_constraints(grapes_ctx, [
        Predicate("rating", "more-than", ContextRelative())])
    assert out == [Constraint("more-than", "rating", "4.5")]

    out = extract_constraints(grapes_ctx, [
        Predicate("price", "less-than", ExplicitValue(2.0, "2"))])
    assert out == [Constraint("less-than", "price", "2")]

    out = extract_constraints(grapes_ctx, [
        Predicate("diet", "include", ExplicitValue("vegan", "vegan"))])
    assert out == [Constraint("include", "diet", "vegan")]

    out = extract_constraints(grapes_ctx, [
        Predicate("price", "equal", ExplicitValue(1.50, "1.50"))])
    assert out == [Constraint("equal", "price", "1.50")]


def test_constraints_keep_mention_order(onto, grapes_ctx):
    out = extract_constraints(grapes_ctx, [
        Predicate("diet", "include", ExplicitValue("vegan", "vegan")),
        Predicate("price", "less-than", ExplicitValue(5.0, "5")),
    ])
    assert [c.relation for c in out] == ["include", "less-than"]


def test_context_relative_requires_carriers(onto):
    ctx = ctx_of(onto, [])
    with pytest.raises(OracleError):
        extract_constraints(ctx, [Predicate("price", "less-than", ContextRelative())])


def test_derive_gold_decision_procedure(onto, apples_ctx):
    assert derive_gold(apples_ctx, NO_REASON_QUERY) == NoAnswer()

    q = QuerySemantics(INFORM_OPEN, predicates=(Predicate("price", "min"),))
    assert derive_gold(apples_ctx, q) == InformItems(("Fuji Apple",))

    q = QuerySemantics(SELECT, predicates=(Predicate("price", "max"),))
    assert derive_gold(apples_ctx, q) == SelectItems(("Organic Honeycrisp Apple",))

    q = QuerySemantics(INFORM_TF, subject=ItemRef(name="Fuji Apple"),
                       predicates=(Predicate("price", "min"),))
    assert derive_gold(apples_ctx, q) == InformTF(True)


def test_derive_gold_vegan_and_cheaper_fallthrough(onto):
    # "Anything vegan and cheaper than five dollars?" with no vegan cheese
    ctx = ctx_of(onto, [
        Item("Zola", "cheese", {"price": 6.49}),
        Item("Muller", "cheese", {"price": 8.99}),
    ])
    q = QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("diet", "include", ExplicitValue("vegan", "vegan")),
        Predicate("price", "less-than", ExplicitValue(5.0, "5"))))
    gold = derive_gold(ctx, q)
    assert gold == Constraints((Constraint("include", "diet", "vegan"),
                                Constraint("less-than", "price", "5")))
    assert emit_output(gold) == "include diet vegan and less-than price 5"


def test_derive_gold_superlative_fallthrough_uses_comparative(onto):
    ctx = ctx_of(onto, [
        Item("Yogurt A", "yogurt", {"price": 2.00, "flavor": "strawberry"}),
        Item("Yogurt B", "yogurt", {"price": 3.00, "flavor": "strawberry"}),
    ])
    q = QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("price", "min"),
        Predicate("flavor", "exclude", ExplicitValue("strawberry", "strawberry"))))
    gold = derive_gold(ctx, q)
    assert gold == Constraints((Constraint("less-than", "price", "2.00"),
                                Constraint("exclude", "flavor", "strawberry")))


def test_derive_gold_multi_item_answer_in_ordinal_order(onto):
    ctx = ctx_of(onto, [
        Item("Yogurt A", "yogurt", {"diet": "vegan"}),
        Item("Yogurt B", "yogurt", {"diet": "keto"}),
        Item("Yogurt C", "yogurt", {"diet": "vegan"}),
    ])
    q = QuerySemantics(INFORM_OPEN, predicates=(
        Predicate("diet", "include", ExplicitValue("vegan", "vegan")),))
    gold = derive_gold(ctx, q)
    vegan_in_order = [name for name in ctx.ordinal_names
                      if ctx.item_by_name(name).values.get("diet") == "vegan"]
    assert gold == InformItems(tuple(vegan_in_order))


def test_emit_published_examples():
    assert emit_output(InformTF(True)) == "inform true"
    assert emit_output(InformTF(False)) == "inform false"
    assert emit_output(NoAnswer()) == "NoAnswer"
    assert emit_output(SelectItems(("Organic Gala Apple",))) == \
        "select Organic Gala Apple"
    assert emit_output(Constraints((Constraint("equal", "price", "1.50"),))) == \
        "equal price 1.50"
    assert emit_output(InformItems(("A Apple", "B Apple"))) == \
        "inform A Apple and B Apple"


def test_emit_rejects_invalid():
    with pytest.raises(OracleError):
        emit_output(InformItems(()))
    with pytest.raises(OracleError):
        emit_output(InformItems(("A", "A")))
    with pytest.raises(OracleError):
        emit_output(Constraints(()))


def test_parse_output_round_trip_examples():
    for text in ("NoAnswer", "inform true", "inform false",
                 "inform Yogurt Anisakis", "select A and B",
                 "include diet vegan and less-than price 5",
                 "more-than rating 4.5", "equal price 1.50"):
        assert emit_output(parse_output(text)) == text


def test_parse_output_errors_carry_position():
    with pytest.raises(OutputParseError):
        parse_output("inform maybe")
    with pytest.raises(OutputParseError):
        parse_output("less-than price")
    with pytest.raises(OutputParseError):
        parse_output("sort-of price 2")
    with pytest.raises(OutputParseError):
        parse_output("less-than price abc")
    with pytest.raises(OutputParseError):
        parse_output("include diet 5.0")
    with pytest.raises(OutputParseError):
        parse_output("")


def test_parse_output_position_points_at_failure():
    with pytest.raises(OutputParseError) as err:
        parse_output("include diet vegan and maybe price 2")
    assert err.value.position == len("include diet vegan and ")


def test_oracle_agrees_with_reference(onto, make_ctx):
    rng = random.Random(11)
    checked = 0
    for seed in range(25):
        ctx = make_ctx(k=seed % 6, case="I", seed=300 + seed)
        for q in enumerate_applicable_queries(ctx, onto, rng=random.Random(seed)):
            assert emit_output(derive_gold(ctx, q)) == reference_answer(ctx, q, onto)
            checked += 1
    assert checked > 2000


def test_constraint_unsatisfiability_invariant(onto, make_ctx):
    rng = random.Random(13)
    from dialoracle.querygen import sample_query, EXTRACT
    seen = 0
    for trial in range(400):
        ctx = make_ctx(k=rng.randint(0, 5), seed=700 + trial)
        q = sample_query(ctx, onto, rng, target_class=EXTRACT)
        if q is None:
            continue
        gold = derive_gold(ctx, q)
        assert isinstance(gold, Constraints)
        explicit = [p for p in q.predicates if isinstance(p.operand, ExplicitValue)]
        if explicit:
            assert filter_items(ctx, explicit) == []
        for pred in q.predicates:
            if isinstance(pred.operand, ContextRelative) or pred.op in ("min", "max"):
                constraint = next(c for c in extract_constraints(ctx, [pred]))
                threshold = float(constraint.value)
                for item in ctx.items:
                    if item.has(pred.attribute):
                        value = item.values[pred.attribute]
                        if constraint.relation == "less-than":
                            assert value >= threshold
                        else:
                            assert value <= threshold
        seen += 1
    assert seen > 100


def test_round_trip_parse_derive_from_text(onto, grapes_ctx):
    ctx = parse_context(grapes_ctx.full_text, onto)
    q = parse_query("Is the second one more popular?", onto)
    assert emit_output(derive_gold(ctx, q)) == "inform false"
