"""Tests for pseudo-hyperproperty detection and existential realizability."""

import random

import pytest

from hypertsl.pseudo import (
    NOT_PSEUDO,
    PSEUDO,
    REALIZABILITY_UNKNOWN,
    UNKNOWN,
    UNREALIZABLE,
    PseudoError,
    build_pseudo_check,
    check_exists_unrealizable,
    collapse,
    decide_exists_forall_sat,
    exists_encoding,
    is_pseudo_hyperltl,
    is_pseudo_hypertsl,
    pseudo_realizability_local_determinism,
)
from hypertsl.semantics import LassoTrace, eval_hyperltl
from hypertsl.syntax import (
    And,
    HyperTslFormula,
    Iff,
    Leaf,
    Not,
    Or,
    PlainAp,
    iter_leaves,
    parse_property,
    print_ap,
    print_formula,
    print_property,
    tag_formula,
)

from generators import hyper_ltl_formula, lasso_trace, ltl_formula, plain_aps


AGREEMENT = "forall p1. forall p2. p(a)@p1 <-> p(a)@p2"


# ---------------------------------------------------------------------------
# collapse / check construction


def test_collapse_unifies_variables():
    f = parse_property(AGREEMENT)
    c = collapse(f)
    assert c.prefix == (("forall", "p1"),)
    assert print_property(c) == "forall p1. p(a)@p1 <-> p(a)@p1"


def test_collapse_single_variable_unchanged():
    f = parse_property("forall p1. G a@p1")
    assert collapse(f) is f


def test_collapse_rejects_existential():
    f = parse_property("exists p1. a@p1")
    with pytest.raises(PseudoError):
        collapse(f)


def test_build_pseudo_check_shape():
    f = parse_property(AGREEMENT)
    check = build_pseudo_check(f)
    assert [kind for kind, _ in check.prefix] == ["exists", "exists", "forall"]
    assert check.variables[:2] == ("p1", "p2")
    fresh = check.variables[2]
    assert fresh not in ("p1", "p2")
    assert isinstance(check.body, And)
    assert check.body.left == Not(f.body)
    # the second conjunct reads the body on the fresh variable only
    tags = {leaf.trace for leaf in iter_leaves(check.body.right)}
    assert tags == {fresh}


def test_build_pseudo_check_fresh_variable_dodges_collisions():
    f = parse_property("forall pi. forall pi_. a@pi && a@pi_")
    check = build_pseudo_check(f)
    assert check.variables[2] not in ("pi", "pi_")


# ---------------------------------------------------------------------------
# exists-forall satisfiability


def test_decide_simple_exists_sat():
    sat, witnesses = decide_exists_forall_sat(parse_property("exists p1. a@p1"))
    assert sat and len(witnesses) == 1
    assert eval_hyperltl(parse_property("exists p1. a@p1"), list(witnesses))


def test_decide_contradictory_unsat():
    f = parse_property("exists p1. forall p2. a@p1 && !a@p2")
    assert decide_exists_forall_sat(f) == (False, None)


def test_decide_pure_forall_satisfied_by_empty_set():
    # even "forall p. false" holds over the empty trace set
    sat, witnesses = decide_exists_forall_sat(
        parse_property("forall p1. false"))
    assert sat and witnesses == ()


def test_decide_rejects_forall_before_exists():
    f = parse_property("forall p1. exists p2. a@p1 && a@p2")
    with pytest.raises(PseudoError):
        decide_exists_forall_sat(f)


def _random_exists_forall(rng):
    f = hyper_ltl_formula(rng, depth=3)
    n = len(f.prefix)
    split = rng.randint(1, n)
    prefix = tuple(("exists" if i < split else "forall", v)
                   for i, (_, v) in enumerate(f.prefix))
    return HyperTslFormula(prefix, f.body, f.flavor)


def test_decide_witnesses_verify_bulk():
    rng = random.Random(4401)
    sat_count = 0
    for _ in range(250):
        f = _random_exists_forall(rng)
        sat, witnesses = decide_exists_forall_sat(f)
        if sat:
            sat_count += 1
            assert eval_hyperltl(f, list(witnesses))
    assert sat_count > 80  # the sample is not degenerate


def test_decide_unsat_is_definitive_against_random_sets():
    rng = random.Random(4402)
    aps = plain_aps(("a", "b", "c"))
    unsat = []
    for _ in range(120):
        f = _random_exists_forall(rng)
        if not decide_exists_forall_sat(f)[0]:
            unsat.append(f)
    # random formulas are rarely contradictory, so add a family that always
    # is: some trace satisfies the body while every trace refutes it
    for _ in range(40):
        body = ltl_formula(rng, rng.randint(1, 3), aps)
        f = HyperTslFormula(
            (("exists", "p1"), ("forall", "p2")),
            And(tag_formula(body, "p1"), Not(tag_formula(body, "p2"))))
        assert not decide_exists_forall_sat(f)[0]
        unsat.append(f)
    assert len(unsat) >= 40
    for f in unsat:
        for _ in range(10):
            traces = [lasso_trace(rng, aps)
                      for _ in range(rng.randint(1, 3))]
            assert not eval_hyperltl(f, traces)


# ---------------------------------------------------------------------------
# pseudo detection, HyperLTL level


def test_agreement_is_not_pseudo_with_checkable_witness():
    f = parse_property(AGREEMENT)
    verdict = is_pseudo_hyperltl(f)
    assert verdict.kind == NOT_PSEUDO
    assert len(verdict.witnesses) == 2
    collapsed = collapse(f)
    for t in verdict.witnesses:
        assert eval_hyperltl(collapsed, [t])
    assert not eval_hyperltl(f, list(verdict.witnesses))


def test_vacuous_second_variable_is_pseudo():
    verdict = is_pseudo_hyperltl(
        parse_property("forall p1. forall p2. G a@p1"))
    assert verdict.kind == PSEUDO
    assert print_property(verdict.collapsed) == "forall p1. G a@p1"


def test_constant_false_is_pseudo():
    assert is_pseudo_hyperltl(
        parse_property("forall p1. forall p2. false")).kind == PSEUDO


def test_single_variable_is_always_pseudo():
    f = parse_property("forall p1. F a@p1")
    verdict = is_pseudo_hyperltl(f)
    assert verdict.kind == PSEUDO and verdict.collapsed is f


def _forced_forall(f):
    return HyperTslFormula(tuple(("forall", v) for v in f.variables),
                           f.body, f.flavor)


def test_pseudo_verdicts_sound_bulk():
    rng = random.Random(4403)
    sets_rng = random.Random(7711)  # keep the formula stream independent
    aps = plain_aps(("a", "b", "c"))
    pseudo_count = not_pseudo_count = 0
    for _ in range(150):
        f = _forced_forall(hyper_ltl_formula(rng, depth=2))
        verdict = is_pseudo_hyperltl(f)
        assert verdict.kind in (PSEUDO, NOT_PSEUDO)  # never unknown here
        if verdict.kind == PSEUDO:
            pseudo_count += 1
            collapsed = verdict.collapsed
            for _ in range(5):
                traces = [lasso_trace(sets_rng, aps)
                          for _ in range(sets_rng.randint(1, 4))]
                assert eval_hyperltl(f, traces) == all(
                    eval_hyperltl(collapsed, [t]) for t in traces)
        else:
            not_pseudo_count += 1
            collapsed = collapse(f)
            for t in verdict.witnesses:
                assert eval_hyperltl(collapsed, [t])
            assert not eval_hyperltl(f, list(verdict.witnesses))
    assert pseudo_count > 20 and not_pseudo_count > 20


def test_pseudo_is_monotone_under_tautologies():
    rng = random.Random(4404)
    kept = 0
    for _ in range(60):
        f = _forced_forall(hyper_ltl_formula(rng, depth=2))
        if is_pseudo_hyperltl(f).kind != PSEUDO:
            continue
        kept += 1
        a = Leaf(PlainAp("a"), trace=f.variables[0])
        widened = HyperTslFormula(f.prefix, And(f.body, Or(a, Not(a))),
                                  f.flavor)
        assert is_pseudo_hyperltl(widened).kind == PSEUDO
    assert kept > 10


# ---------------------------------------------------------------------------
# pseudo detection, HyperTSL level


def test_hypertsl_false_is_pseudo():
    verdict = is_pseudo_hypertsl(parse_property("forall p1. forall p2. false"))
    assert verdict.kind == PSEUDO


def test_hypertsl_agreement_degrades_to_unknown():
    f = parse_property(
        "forall p1. forall p2. [c <- f()]@p1 <-> [c <- f()]@p2")
    verdict = is_pseudo_hypertsl(f)
    assert verdict.kind == UNKNOWN
    assert verdict.collapsed is None and verdict.witnesses is None


def test_hypertsl_context_can_turn_unknown_into_pseudo():
    f = parse_property(
        "forall p1. forall p2. [c <- A()]@p1 <-> [c <- A()]@p2")
    assert is_pseudo_hypertsl(f).kind == UNKNOWN
    context = parse_property("G [c <- A()]")
    verdict = is_pseudo_hypertsl(f, context=context)
    assert verdict.kind == PSEUDO
    # the collapsed payload carries the context per trace
    assert "G [c <- A()]" in print_property(verdict.collapsed)


def test_hypertsl_rejects_rel_flavor():
    f = parse_property(
        "flavor: rel\nforall p1. forall p2. p(x@p1, x@p2)")
    with pytest.raises(PseudoError):
        is_pseudo_hypertsl(f)


# ---------------------------------------------------------------------------
# existential encoding and unrealizability


def _top_conjuncts(f):
    out, stack = [], [f]
    while stack:
        node = stack.pop()
        if isinstance(node, And):
            stack.extend((node.right, node.left))
        else:
            out.append(node)
    return out


def test_exists_encoding_two_traces():
    f = parse_property("exists p1. exists p2. G [c <- f(c)]@p1 && F p(c)@p2")
    encoded = exists_encoding(f)
    parts = _top_conjuncts(encoded)
    # the cloned body plus one closure constraint per ordered variable pair
    assert len(parts) == 2 + 4
    text = print_formula(encoded)
    assert "c_1" in text and "c_2" in text
    assert all(leaf.trace is None for leaf in iter_leaves(encoded))
    # function and predicate symbols are shared between the copies
    assert "f(c_1)" in text and "f(c_2)" in text
    assert "p(c_1)" in text and "p(c_2)" in text


def test_exists_encoding_single_trace_is_renamed_body_plus_tautology():
    f = parse_property("exists p1. G [c <- f(c)]@p1")
    parts = _top_conjuncts(exists_encoding(f))
    assert len(parts) == 2
    assert print_formula(parts[0]) == "G [c_1 <- f(c_1)]"
    # the diagonal closure constraint is a tautology pattern
    assert print_formula(parts[1]) == \
        "([c_1 <- f(c_1)] <-> [c_1 <- f(c_1)]) W false"


def test_exists_encoding_dodges_stream_name_collisions():
    f = parse_property("exists p1. G [x <- g(x_1)]@p1")
    text = print_formula(exists_encoding(f))
    assert "[x__1 <- g(x_1_1)]" in text


def test_exists_encoding_rejects_universals():
    with pytest.raises(PseudoError):
        exists_encoding(parse_property("forall p1. a@p1"))


def test_contradictory_existential_is_unrealizable():
    f = parse_property(
        "exists p1. G [c <- f(c)]@p1 && G !([c <- f(c)]@p1)")
    assert check_exists_unrealizable(f) == UNREALIZABLE


def test_simultaneous_updates_are_unrealizable():
    # two different updates of one cell at the same instant: the encoding
    # itself is a satisfiable boolean shape, only the exactly-one update
    # discipline refutes it
    f = parse_property("exists p1. G ([c <- f(c)]@p1 && [c <- g(c)]@p1)")
    assert check_exists_unrealizable(f) == UNREALIZABLE


def test_satisfiable_existential_stays_unknown():
    f = parse_property("exists p1. G [c <- f(c)]@p1")
    assert check_exists_unrealizable(f) == REALIZABILITY_UNKNOWN


# ---------------------------------------------------------------------------
# strategy enumeration under local determinism


TRIO = ("forall p1. forall p2. "
        "G ((i@p1 <-> i@p2) -> (o@p1 <-> o@p2)) && "
        "G (!(i@p1 <-> i@p2) -> !(o@p1 <-> o@p2)) && "
        "G ((i@p1 && !i@p2 && o@p2) -> o@p1)")


def _strategy_table(decision):
    return {frozenset(str(a) for a in val): frozenset(str(a) for a in out)
            for val, out in decision.strategy}


def test_trio_pins_down_output_copies_input():
    decision = pseudo_realizability_local_determinism(parse_property(TRIO))
    assert decision.found and decision.bounded
    (empty_out,) = [out for val, out in decision.strategy if not val]
    (seen_out,) = [out for val, out in decision.strategy if val]
    assert empty_out == frozenset()
    assert len(seen_out) == 1  # the output atom, chosen exactly when i holds


def test_determinism_alone_accepts_first_strategy():
    f = parse_property(
        "forall p1. forall p2. G ((i@p1 <-> i@p2) -> (o@p1 <-> o@p2))")
    decision = pseudo_realizability_local_determinism(f)
    assert decision.found and decision.candidates == 1
    assert all(out == frozenset() for _, out in decision.strategy)


def test_unsatisfiable_rest_exhausts_all_strategies():
    f = parse_property(
        "forall p1. forall p2. "
        "G ((i@p1 <-> i@p2) -> (o@p1 <-> o@p2)) && false")
    decision = pseudo_realizability_local_determinism(f)
    assert not decision.found
    assert decision.candidates == 4  # 2 valuations x 2 output choices
    assert decision.as_dict() is None


def test_update_outputs_group_per_cell():
    f = parse_property(
        "forall p1. forall p2. G ((p(x)@p1 <-> p(x)@p2) -> "
        "(([c <- A()]@p1 <-> [c <- A()]@p2) && "
        "([c <- B()]@p1 <-> [c <- B()]@p2)))")
    decision = pseudo_realizability_local_determinism(f)
    # 2 valuations, 3 options each (A, B, keep): first candidate passes
    assert decision.found and decision.candidates == 1
    for _, out in decision.strategy:
        assert len(out) == 1  # exactly one update of the cell
    lean = pseudo_realizability_local_determinism(f, include_self=False)
    assert lean.found
    assert all("A()" in print_ap(next(iter(out))) for _, out in lean.strategy)


def test_strategy_search_requires_schema():
    with pytest.raises(PseudoError):
        pseudo_realizability_local_determinism(
            parse_property("forall p1. forall p2. G a@p1"))


def test_strategy_search_requires_two_variables():
    with pytest.raises(PseudoError):
        pseudo_realizability_local_determinism(
            parse_property("forall p1. G (a@p1 -> a@p1)"))


def test_strategy_search_caps_observed_atoms():
    left = " && ".join(f"(i{k}@p1 <-> i{k}@p2)" for k in range(7))
    f = parse_property(
        f"forall p1. forall p2. G (({left}) -> (o@p1 <-> o@p2))")
    with pytest.raises(PseudoError):
        pseudo_realizability_local_determinism(f)
