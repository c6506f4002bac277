"""Seeded random generators for formulas, terms, executions and traces.

A plain ``random.Random`` drives everything, so hypothesis can fuzz by
feeding integer seeds while plain loops reuse the same code.  All generated
objects respect the parser's invariants (consistent arities, disjoint
stream/applied namespaces, fully tagged leaves under a quantifier prefix).

Streams are split by role so that generated formulas always evaluate
cleanly: ``BOOL_STREAMS`` are only read bare (boolean method flags),
``DOMAIN_STREAMS`` only occur inside terms, and cells are domain valued.
"""

from __future__ import annotations

import random

from hypertsl.semantics import LassoExecution, LassoStep, LassoTrace
from hypertsl.syntax import (
    And, Apply, Eventually, FALSE, Globally, HyperTslFormula, Iff, Implies,
    Leaf, Next, Not, Or, PlainAp, PredicateTerm, Release, SymbolRef, TRUE,
    Until, UpdateTerm, WeakUntil,
)

BOOL_STREAMS = ("x", "y")
CELLS = ("c1", "c2")
DOMAIN_STREAMS = ("z", "sender", "c1", "c2")
DOMAIN = ("v0", "v1", "v2", "v3")
FUNCTIONS = (("f", 1), ("g", 2), ("A", 0), ("B", 0))
PREDICATES = (("p", 1), ("q", 2), ("r", 0))

_BIN = (And, Or, Implies, Iff, Until, WeakUntil, Release)
_UN = (Not, Next, Eventually, Globally)


def function_term(rng: random.Random, depth: int = 2):
    if depth <= 0 or rng.random() < 0.5:
        return SymbolRef(rng.choice(DOMAIN_STREAMS))
    name, arity = rng.choice(FUNCTIONS)
    return Apply(name, tuple(function_term(rng, depth - 1) for _ in range(arity)))


def predicate_term(rng: random.Random) -> PredicateTerm:
    if rng.random() < 0.3:
        return PredicateTerm(rng.choice(BOOL_STREAMS), (), application=False)
    name, arity = rng.choice(PREDICATES)
    return PredicateTerm(
        name, tuple(function_term(rng, 2) for _ in range(arity)))


def update_term(rng: random.Random) -> UpdateTerm:
    return UpdateTerm(rng.choice(CELLS), function_term(rng, 2))


def leaf(rng: random.Random, variables=(), flavor: str = "plain") -> Leaf:
    if rng.random() < 0.35:
        term = update_term(rng)
        trace = rng.choice(variables) if variables else None
        return Leaf(term, trace=trace)
    term = predicate_term(rng)
    if not variables:
        return Leaf(term)
    if flavor == "rel" and term.application and term.args and rng.random() < 0.6:
        return Leaf(term, arg_traces=tuple(
            rng.choice(variables) for _ in term.args))
    return Leaf(term, trace=rng.choice(variables))


def formula(rng: random.Random, depth: int, variables=(),
            flavor: str = "plain", leaf_fn=None):
    """A random formula tree; ``leaf_fn(rng)`` overrides leaf construction."""
    if leaf_fn is None:
        def leaf_fn(r):
            return leaf(r, variables, flavor)
    if depth <= 0 or rng.random() < 0.2:
        roll = rng.random()
        if roll < 0.05:
            return TRUE
        if roll < 0.10:
            return FALSE
        return leaf_fn(rng)
    shape = rng.random()
    if shape < 0.45:
        op = rng.choice(_UN)
        return op(formula(rng, depth - 1, variables, flavor, leaf_fn))
    op = rng.choice(_BIN)
    return op(formula(rng, depth - 1, variables, flavor, leaf_fn),
              formula(rng, depth - 1, variables, flavor, leaf_fn))


def hyper_formula(rng: random.Random, depth: int = 4,
                  flavor: str = "plain") -> HyperTslFormula:
    n = rng.randint(1, 3)
    variables = tuple(f"p{i + 1}" for i in range(n))
    prefix = tuple((rng.choice(("forall", "exists")), v) for v in variables)
    return HyperTslFormula(prefix, formula(rng, depth, variables, flavor),
                           flavor)


def ltl_formula(rng: random.Random, depth: int, aps):
    """A random LTL formula over the given atomic propositions."""
    aps = tuple(aps)
    return formula(rng, depth, leaf_fn=lambda r: Leaf(r.choice(aps)))


def hyper_ltl_formula(rng: random.Random, depth: int = 4,
                      names=("a", "b", "c")) -> HyperTslFormula:
    n = rng.randint(1, 3)
    variables = tuple(f"p{i + 1}" for i in range(n))
    prefix = tuple((rng.choice(("forall", "exists")), v) for v in variables)
    body = formula(rng, depth, leaf_fn=lambda r: Leaf(
        PlainAp(r.choice(names)), trace=r.choice(variables)))
    return HyperTslFormula(prefix, body)


def plain_aps(names) -> tuple:
    return tuple(PlainAp(n) for n in names)


# -- traces and executions


def valuation(rng: random.Random, aps) -> frozenset:
    return frozenset(ap for ap in aps if rng.random() < 0.5)


def lasso_trace(rng: random.Random, aps, max_stem: int = 4,
                max_loop: int = 3) -> LassoTrace:
    aps = tuple(aps)
    stem = tuple(valuation(rng, aps) for _ in range(rng.randint(0, max_stem)))
    loop = tuple(valuation(rng, aps) for _ in range(rng.randint(1, max_loop)))
    return LassoTrace(stem, loop)


def lasso_step(rng: random.Random) -> LassoStep:
    inputs = {name: rng.random() < 0.5 for name in BOOL_STREAMS}
    inputs.update({name: rng.choice(DOMAIN)
                   for name in DOMAIN_STREAMS if name not in CELLS})
    updates = {cell: function_term(rng, 2) for cell in CELLS}
    return LassoStep(inputs, updates)


def lasso_execution(rng: random.Random, max_stem: int = 3,
                    max_loop: int = 3) -> LassoExecution:
    stem = tuple(lasso_step(rng) for _ in range(rng.randint(0, max_stem)))
    loop = tuple(lasso_step(rng) for _ in range(rng.randint(1, max_loop)))
    return LassoExecution(stem, loop)


def execution_matching(rng: random.Random, formula, max_stem: int = 3,
                       max_loop: int = 3) -> LassoExecution:
    """An execution drawing updates from the formula's own update terms.

    Each step picks, per cell, one of the update terms the formula mentions
    for that cell or the self-update - the discipline under which the
    propositional approximation is exact.
    """
    from hypertsl.syntax import collect_terms, print_term

    ct = collect_terms(formula)
    bare = {t.symbol for t in ct.predicates if not t.application}
    domain_inputs = sorted(set(ct.inputs) - bare)
    per_cell = {}
    for u in ct.updates:
        per_cell.setdefault(u.cell, []).append(u.term)
    for cell, terms in per_cell.items():
        terms.append(SymbolRef(cell))
        terms.sort(key=print_term)

    def step() -> LassoStep:
        inputs = {name: rng.random() < 0.5 for name in sorted(bare)}
        inputs.update({name: rng.choice(DOMAIN) for name in domain_inputs})
        updates = {cell: rng.choice(terms)
                   for cell, terms in sorted(per_cell.items())}
        return LassoStep(inputs, updates)

    stem = tuple(step() for _ in range(rng.randint(0, max_stem)))
    loop = tuple(step() for _ in range(rng.randint(1, max_loop)))
    return LassoExecution(stem, loop)
