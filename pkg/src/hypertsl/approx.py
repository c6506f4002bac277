"""Propositional approximation of TSL in LTL, and its hyper lifting.

The approximation forgets that predicates applied to equal values must agree:
every predicate term and every update term becomes an opaque atomic
proposition (*syntactic conversion*).  What survives of the update semantics
is its syntactic discipline - each step assigns exactly one update term per
cell - enforced by the *cell propositions*

    G ( for each cell c: exactly one of the update propositions of c )

ranging over the update terms the formula mentions plus the implicit
self-update ``[c <- c]`` (a formula that never mentions an update for some
step still allows the cell to keep its value).  The approximation of a
formula psi is ``syntactic_conversion(psi) && cell_props(psi)``; for a
quantified formula the cell propositions are replicated once per trace
variable, since every quantified execution is subject to the same update
discipline.

The translation is sound but not exact: ``p(x) && [x <- x] && X !p(x)`` is
unsatisfiable in TSL (the cell keeps its value, so ``p(x)`` cannot flip) yet
its conversion is satisfiable because ``p(x)`` at different steps is just an
atomic proposition.  Executions translate to traces position by position
(:func:`translate_execution`), and on executions whose updates are drawn
from the formula's update terms (plus self-updates) the approximation agrees
exactly with the TSL semantics - the property tests exercise precisely that
correspondence.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .semantics import (
    Interpretation, LassoExecution, LassoTrace, configuration_lasso,
    pred_value,
)
from .syntax import (
    And, Globally, HyperTslFormula, Leaf, Not, Or, PredicateAp,
    PredicateTerm, SymbolRef, TRUE, TslError, UpdateAp, UpdateTerm,
    collect_terms, iter_leaves, map_leaves,
)


class ApproxError(TslError):
    pass


def syntactic_conversion(formula):
    """Replace every term leaf by an opaque atomic proposition.

    Trace tags survive on the leaves; per-argument tags cannot be expressed
    propositionally (the predicate value genuinely depends on several traces
    at once) and are rejected.
    """

    def convert(leaf: Leaf) -> Leaf:
        if leaf.arg_traces is not None:
            raise ApproxError(
                "per-argument trace tags have no propositional approximation")
        term = leaf.term
        if isinstance(term, PredicateTerm):
            return Leaf(PredicateAp(term), trace=leaf.trace)
        if isinstance(term, UpdateTerm):
            return Leaf(UpdateAp(term), trace=leaf.trace)
        if isinstance(term, (PredicateAp, UpdateAp)):
            return leaf  # already propositional
        raise ApproxError(f"cannot convert leaf {term!r}")

    return map_leaves(formula, convert)


def _exactly_one(aps, trace: Optional[str]):
    aps = list(aps)
    disjuncts = []
    for i, ap in enumerate(aps):
        conj = Leaf(ap, trace=trace)
        for j, other in enumerate(aps):
            if j != i:
                conj = And(conj, Not(Leaf(other, trace=trace)))
        disjuncts.append(conj)
    out = disjuncts[0]
    for d in disjuncts[1:]:
        out = Or(out, d)
    return out


def update_universe(formula, inject_self: bool = True) -> dict:
    """The update terms of each cell of ``formula``, optionally with the
    self-update injected."""
    updates = {}
    for u in collect_terms(formula).updates:
        updates.setdefault(u.cell, set()).add(u)
    if inject_self:
        for cell in updates:
            updates[cell].add(UpdateTerm(cell, SymbolRef(cell)))
    return updates


def cell_props(formula, trace: Optional[str] = None,
               inject_self: bool = True):
    """``G`` of "exactly one update proposition per cell" for the cells of
    ``formula``; ``true`` if it updates no cell."""
    universe = update_universe(formula, inject_self)
    if not universe:
        return TRUE
    conj = None
    for cell in sorted(universe):
        aps = [UpdateAp(u) for u in sorted(universe[cell],
                                           key=lambda u: str(u.term))]
        one = _exactly_one(aps, trace)
        conj = one if conj is None else And(conj, one)
    return Globally(conj)


def translate_formula(formula, inject_self: bool = True):
    """The full approximation: syntactic conversion plus cell propositions.

    Quantifier-free formulas get one untagged cell-proposition conjunct;
    quantified formulas get one per trace variable (any quantifier kind).
    """
    if isinstance(formula, HyperTslFormula):
        if formula.flavor == "rel":
            raise ApproxError(
                "per-argument trace tags have no propositional approximation")
        body = syntactic_conversion(formula.body)
        for var in formula.variables:
            props = cell_props(formula.body, trace=var,
                               inject_self=inject_self)
            if props != TRUE:
                body = And(body, props)
        return HyperTslFormula(formula.prefix, body, formula.flavor)
    body = syntactic_conversion(formula)
    props = cell_props(formula, inject_self=inject_self)
    return body if props == TRUE else And(body, props)


# ---------------------------------------------------------------------------
# executions to traces


def _valuation(config, predicates: Iterable[PredicateTerm],
               interp: Interpretation) -> frozenset:
    aps = {UpdateAp(UpdateTerm(cell, term))
           for cell, term in config.updates.items()}
    for term in predicates:
        if pred_value(term, config.inputs, config.values, interp):
            aps.add(PredicateAp(term))
    return frozenset(aps)


def translate_execution(execution: LassoExecution, interp: Interpretation,
                        predicates: Iterable[PredicateTerm] = ()) -> LassoTrace:
    """Translate an execution into the lasso trace of its observations.

    Positions are those of the execution's configuration lasso, so the trace
    is exact: update propositions record the update term actually chosen for
    each cell, predicate propositions record the value of each tracked
    predicate term on the current inputs and cell values.
    """
    predicates = tuple(predicates)
    cstem, cloop = configuration_lasso(execution, interp)
    return LassoTrace(
        tuple(_valuation(c, predicates, interp) for c in cstem),
        tuple(_valuation(c, predicates, interp) for c in cloop))


def translate_execution_prefix(execution: LassoExecution,
                               interp: Interpretation,
                               predicates: Iterable[PredicateTerm],
                               length: int) -> list:
    """The first ``length`` positions of the translated trace, unrolled."""
    trace = translate_execution(execution, interp, predicates)
    positions = trace.positions
    n_stem, n_loop = len(trace.stem), len(trace.loop)
    out = []
    for j in range(length):
        idx = j if j < n_stem + n_loop else n_stem + (j - n_stem) % n_loop
        out.append(positions[idx])
    return out
