"""Exact evaluation of (Hyper)TSL on lasso executions and (Hyper)LTL on
lasso traces.

An *execution* fixes, per step, the values of all input streams and the
update term applied to each cell; cell values then follow deterministically
from an interpretation of the function and predicate symbols plus initial
cell values.  A lasso execution (finite stem + finite loop repeated forever)
describes an infinite execution, and because the induced cell values need
not repeat with the execution's own period, evaluation first computes the
*configuration lasso*: simulate values forward until the pair (execution
position class, cell values) repeats.  Everything observable - inputs,
chosen update terms, cell values, hence predicate values - is periodic along
that lasso.

Temporal operators are then solved by fixpoint iteration over the finitely
many position classes: least fixpoints for U/F (nothing is eventually true
unless forced), greatest for W/R/G.  Several traces of different periods are
aligned on a joint lasso of stem ``max`` and loop ``lcm``.

Quantifiers range over a finite set of executions (or traces): the empty set
satisfies every formula whose outermost quantifier is universal and
falsifies every existentially quantified one, exactly like ``all([])`` and
``any([])``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from math import lcm
from typing import Mapping, Optional, Sequence

from .syntax import (
    And, Apply, CollectedTerms, Eventually, FalseConst, FunctionTerm,
    Globally, HyperTslFormula, Iff, Implies, Leaf, Next, Not, Or, PlainAp,
    PredicateAp, PredicateTerm, Release, SymbolRef, TrueConst, TslError,
    Until, UpdateAp, UpdateTerm, ValidationError, WeakUntil, collect_terms,
    iter_leaves, parse_ap_text, parse_term_text,
)


class EvalError(TslError):
    pass


# ---------------------------------------------------------------------------
# interpretations


@dataclass(frozen=True)
class Interpretation:
    """Finite interpretation of the uninterpreted symbols.

    ``functions`` and ``predicates`` map symbol names to total tables from
    argument tuples to values (resp. booleans); ``init`` gives each cell its
    value before the first step.
    """

    domain: tuple
    init: Mapping[str, object] = field(default_factory=dict)
    functions: Mapping[str, Mapping[tuple, object]] = field(default_factory=dict)
    predicates: Mapping[str, Mapping[tuple, bool]] = field(default_factory=dict)

    def fun(self, name: str, args: tuple):
        table = self.functions.get(name)
        if table is None:
            raise EvalError(f"no interpretation for function '{name}'")
        try:
            return table[args]
        except KeyError:
            raise EvalError(f"function '{name}' has no entry for {args!r}")

    def pred(self, name: str, args: tuple) -> bool:
        table = self.predicates.get(name)
        if table is None:
            raise EvalError(f"no interpretation for predicate '{name}'")
        try:
            return bool(table[args])
        except KeyError:
            raise EvalError(f"predicate '{name}' has no entry for {args!r}")


def eval_term(term: FunctionTerm, inputs: Mapping, cells: Mapping,
              interp: Interpretation):
    """Value of a function term given current input and cell values."""
    if isinstance(term, SymbolRef):
        if term.name in cells:
            return cells[term.name]
        if term.name in inputs:
            return inputs[term.name]
        raise EvalError(f"unknown stream '{term.name}'")
    if isinstance(term, Apply):
        return interp.fun(term.symbol,
                          tuple(eval_term(a, inputs, cells, interp)
                                for a in term.args))
    raise EvalError(f"not a function term: {term!r}")


def pred_value(term: PredicateTerm, inputs: Mapping, cells: Mapping,
               interp: Interpretation) -> bool:
    """Boolean value of a predicate term (or bare boolean stream read)."""
    if not term.application:
        val = eval_term(SymbolRef(term.symbol), inputs, cells, interp)
        if not isinstance(val, bool):
            raise EvalError(
                f"stream '{term.symbol}' read as a boolean but holds {val!r}")
        return val
    return interp.pred(term.symbol,
                       tuple(eval_term(a, inputs, cells, interp)
                             for a in term.args))


# ---------------------------------------------------------------------------
# lasso containers


@dataclass(frozen=True)
class LassoStep:
    """One execution step: input values plus one update term per cell."""

    inputs: Mapping[str, object]
    updates: Mapping[str, FunctionTerm]


@dataclass(frozen=True)
class LassoExecution:
    stem: tuple
    loop: tuple

    def __post_init__(self):
        if not self.loop:
            raise ValidationError("execution loop must be nonempty")
        cells = set(self.loop[0].updates)
        for step in tuple(self.stem) + tuple(self.loop):
            if set(step.updates) != cells:
                raise ValidationError(
                    "every step must update the same set of cells: "
                    f"{sorted(cells)} vs {sorted(step.updates)}")
            overlap = cells & set(step.inputs)
            if overlap:
                raise ValidationError(
                    f"streams {sorted(overlap)} are both inputs and cells")

    @property
    def cells(self) -> frozenset:
        return frozenset(self.loop[0].updates)

    @property
    def steps(self) -> tuple:
        return tuple(self.stem) + tuple(self.loop)


@dataclass(frozen=True)
class LassoTrace:
    """An ultimately periodic trace: frozensets of atomic propositions."""

    stem: tuple
    loop: tuple

    def __post_init__(self):
        if not self.loop:
            raise ValidationError("trace loop must be nonempty")

    @property
    def positions(self) -> tuple:
        return tuple(self.stem) + tuple(self.loop)


def _wrap(j: int, stem: int, loop: int) -> int:
    return j if j < stem + loop else stem + (j - stem) % loop


# ---------------------------------------------------------------------------
# configuration lasso


@dataclass(frozen=True)
class Configuration:
    """One position of the induced value lasso."""

    inputs: Mapping[str, object]
    updates: Mapping[str, FunctionTerm]
    values: Mapping[str, object]


def configuration_lasso(execution: LassoExecution, interp: Interpretation,
                        max_positions: int = 200_000):
    """Simulate cell values until the (position class, values) pair repeats.

    The state space is finite (execution positions times reachable value
    combinations), so this terminates; ``max_positions`` only guards against
    runaway interpretations.
    """
    steps = execution.steps
    n_stem, n_loop = len(execution.stem), len(execution.loop)
    for cell in execution.cells:
        if cell not in interp.init:
            raise EvalError(f"no initial value for cell '{cell}'")
    values = {c: interp.init[c] for c in execution.cells}
    seen = {}
    configs = []
    j = 0
    while True:
        cls = _wrap(j, n_stem, n_loop)
        key = (cls, tuple(sorted(values.items(), key=lambda kv: kv[0])))
        if key in seen:
            split = seen[key]
            return tuple(configs[:split]), tuple(configs[split:])
        seen[key] = j
        step = steps[cls]
        configs.append(Configuration(step.inputs, step.updates, values))
        values = {c: eval_term(t, step.inputs, values, interp)
                  for c, t in step.updates.items()}
        j += 1
        if j > max_positions:
            raise EvalError(
                f"configuration lasso exceeds {max_positions} positions")


# ---------------------------------------------------------------------------
# fixpoint evaluation over position classes

_LFP = (Until, Eventually)
_GFP = (WeakUntil, Release, Globally)


def _eval_classes(body, n_stem: int, n_loop: int, atom_at) -> bool:
    """Evaluate an LTL-shaped formula over the classes of a joint lasso.

    ``atom_at(leaf, p)`` supplies leaf values at class ``p``.  Temporal
    operators are solved by iterating their defining equation to the least
    (U, F) or greatest (W, R, G) fixpoint over the class graph, whose only
    nondeterminism-free successor is p+1 with the last class looping back.
    """
    total = n_stem + n_loop
    succ = [p + 1 for p in range(total)]
    succ[total - 1] = n_stem
    tables = {}

    def table(f):
        got = tables.get(f)
        if got is not None:
            return got
        if isinstance(f, TrueConst):
            val = [True] * total
        elif isinstance(f, FalseConst):
            val = [False] * total
        elif isinstance(f, Leaf):
            val = [atom_at(f, p) for p in range(total)]
        elif isinstance(f, Not):
            val = [not v for v in table(f.child)]
        elif isinstance(f, And):
            val = [a and b for a, b in zip(table(f.left), table(f.right))]
        elif isinstance(f, Or):
            val = [a or b for a, b in zip(table(f.left), table(f.right))]
        elif isinstance(f, Implies):
            val = [(not a) or b for a, b in zip(table(f.left), table(f.right))]
        elif isinstance(f, Iff):
            val = [a == b for a, b in zip(table(f.left), table(f.right))]
        elif isinstance(f, Next):
            child = table(f.child)
            val = [child[succ[p]] for p in range(total)]
        elif isinstance(f, (_LFP, _GFP)):
            if isinstance(f, (Eventually, Globally)):
                left = [True] * total
                right = table(f.child)
            else:
                left, right = table(f.left), table(f.right)
            if isinstance(f, Release):
                # v = b and (a or X v)
                def step(p, v):
                    return right[p] and (left[p] or v[succ[p]])
            elif isinstance(f, Globally):
                def step(p, v):
                    return right[p] and v[succ[p]]
            else:
                # U, W, F: v = b or (a and X v)
                def step(p, v):
                    return right[p] or (left[p] and v[succ[p]])
            val = [not isinstance(f, _LFP)] * total
            changed = True
            while changed:
                changed = False
                for p in reversed(range(total)):
                    new = step(p, val)
                    if new != val[p]:
                        val[p] = new
                        changed = True
        else:
            raise EvalError(f"cannot evaluate node {f!r}")
        tables[f] = val
        return val

    return table(body)[0]


# ---------------------------------------------------------------------------
# LTL / HyperLTL


def _require_untagged_ap(leaf: Leaf):
    if leaf.trace is not None or leaf.arg_traces is not None:
        raise EvalError("trace-tagged leaf outside a quantified evaluation")
    if not isinstance(leaf.term, (PredicateAp, UpdateAp, PlainAp)):
        raise EvalError(f"not an atomic proposition: {leaf.term!r}")


def eval_ltl(formula, trace: LassoTrace) -> bool:
    """Evaluate a quantifier-free LTL formula on one lasso trace."""
    if isinstance(formula, HyperTslFormula):
        if formula.prefix:
            raise EvalError("quantified formula passed to eval_ltl")
        formula = formula.body
    positions = trace.positions

    def atom_at(leaf, p):
        _require_untagged_ap(leaf)
        return leaf.term in positions[p]

    return _eval_classes(formula, len(trace.stem), len(trace.loop), atom_at)


def _enumerate_prefix(prefix, pool, judge):
    """Fold quantifiers over a finite pool; judge(assignment) decides."""

    def go(i, chosen):
        if i == len(prefix):
            return judge(chosen)
        kind, var = prefix[i]
        results = (go(i + 1, {**chosen, var: item}) for item in pool)
        return all(results) if kind == "forall" else any(results)

    return go(0, {})


def _joint_shape(lassos) -> tuple:
    stems = [s for s, _ in lassos]
    loops = [l for _, l in lassos]
    joint_stem = max(stems, default=0)
    joint_loop = lcm(*loops) if loops else 1
    return joint_stem, joint_loop


def eval_hyperltl(formula: HyperTslFormula, traces) -> bool:
    """Evaluate a HyperLTL formula over a finite set of lasso traces."""
    if not isinstance(formula, HyperTslFormula):
        raise EvalError("eval_hyperltl needs a quantified formula")
    pool = list(traces.values()) if isinstance(traces, Mapping) else list(traces)

    def judge(chosen):
        shapes = {v: (len(t.stem), len(t.loop)) for v, t in chosen.items()}
        n_stem, n_loop = _joint_shape(list(shapes.values()))

        def atom_at(leaf, p):
            if leaf.trace is None:
                raise EvalError(
                    "untagged leaf in a quantified formula: cannot evaluate")
            t = chosen[leaf.trace]
            return leaf.term in t.positions[_wrap(p, *shapes[leaf.trace])]

        return _eval_classes(formula.body, n_stem, n_loop, atom_at)

    return _enumerate_prefix(formula.prefix, pool, judge)


# ---------------------------------------------------------------------------
# TSL / HyperTSL


def _config_pred(leaf: Leaf, config: Configuration,
                 interp: Interpretation) -> bool:
    term = leaf.term
    if isinstance(term, UpdateTerm):
        return config.updates.get(term.cell) == term.term
    if isinstance(term, PredicateTerm):
        return pred_value(term, config.inputs, config.values, interp)
    raise EvalError(f"not a stream leaf: {term!r}")


def eval_tsl(formula, execution: LassoExecution,
             interp: Interpretation) -> bool:
    """Evaluate a quantifier-free TSL formula on one lasso execution."""
    if isinstance(formula, HyperTslFormula):
        if formula.prefix:
            raise EvalError("quantified formula passed to eval_tsl")
        formula = formula.body
    cstem, cloop = configuration_lasso(execution, interp)
    configs = cstem + cloop

    def atom_at(leaf, p):
        if leaf.trace is not None or leaf.arg_traces is not None:
            raise EvalError("trace-tagged leaf outside a quantified evaluation")
        return _config_pred(leaf, configs[p], interp)

    return _eval_classes(formula, len(cstem), len(cloop), atom_at)


def eval_hypertsl(formula: HyperTslFormula, executions,
                  interp: Interpretation) -> bool:
    """Evaluate a HyperTSL formula over a finite set of lasso executions.

    Handles both flavors: whole-leaf tags read every part of the leaf from
    one trace; per-argument tags (rel flavor) evaluate each predicate
    argument on its own trace before applying the predicate.
    """
    if not isinstance(formula, HyperTslFormula):
        raise EvalError("eval_hypertsl needs a quantified formula")
    pool = (list(executions.values()) if isinstance(executions, Mapping)
            else list(executions))
    lassos = [configuration_lasso(e, interp) for e in pool]

    def judge(chosen):
        shapes = {v: (len(s), len(l)) for v, (s, l) in chosen.items()}
        n_stem, n_loop = _joint_shape(list(shapes.values()))

        def config_of(var, p):
            cstem, cloop = chosen[var]
            return (cstem + cloop)[_wrap(p, *shapes[var])]

        def atom_at(leaf, p):
            if leaf.arg_traces is not None:
                term = leaf.term
                args = []
                for arg, tag in zip(term.args, leaf.arg_traces):
                    c = config_of(tag, p)
                    args.append(eval_term(arg, c.inputs, c.values, interp))
                return interp.pred(term.symbol, tuple(args))
            if leaf.trace is None:
                raise EvalError(
                    "untagged leaf in a quantified formula: cannot evaluate")
            return _config_pred(leaf, config_of(leaf.trace, p), interp)

        return _eval_classes(formula.body, n_stem, n_loop, atom_at)

    return _enumerate_prefix(formula.prefix, lassos, judge)


# ---------------------------------------------------------------------------
# random interpretations


def collect_symbols(*sources) -> tuple:
    """Gather function/predicate symbols (with arities) and cells.

    Sources may be formulas, terms, :class:`CollectedTerms` or executions;
    returns ``(functions: dict name->arity, predicates: dict name->arity,
    cells: set)``.
    """
    functions, predicates, cells = {}, {}, set()

    def walk_term(term):
        if isinstance(term, Apply):
            functions.setdefault(term.symbol, len(term.args))
            for a in term.args:
                walk_term(a)

    def take(source):
        if isinstance(source, (SymbolRef, Apply)):
            walk_term(source)
        elif isinstance(source, PredicateTerm):
            if source.application:
                predicates.setdefault(source.symbol, len(source.args))
            for a in source.args:
                walk_term(a)
        elif isinstance(source, UpdateTerm):
            cells.add(source.cell)
            walk_term(source.term)
        elif isinstance(source, CollectedTerms):
            for p in source.predicates:
                take(p)
            for u in source.updates:
                take(u)
            cells.update(source.cells)
        elif isinstance(source, LassoExecution):
            for step in source.steps:
                for cell, term in step.updates.items():
                    cells.add(cell)
                    walk_term(term)
        elif isinstance(source, LassoStep):
            take(LassoExecution((), (source,)))
        else:  # a formula
            take(collect_terms(source))

    for source in sources:
        take(source)
    return functions, predicates, cells


def random_interpretation(sources, seed: int = 0, domain_size: int = 4,
                          cells=()) -> Interpretation:
    """A total random interpretation for every symbol found in ``sources``.

    Deterministic in ``seed``.  ``sources`` is an iterable of formulas,
    executions or terms; extra cells that need initial values can be passed
    explicitly.
    """
    rng = random.Random(seed)
    functions, predicates, all_cells = collect_symbols(*sources)
    all_cells.update(cells)
    domain = tuple(f"v{i}" for i in range(domain_size))

    def rows(arity):
        out = [()]
        for _ in range(arity):
            out = [r + (d,) for r in out for d in domain]
        return out

    return Interpretation(
        domain=domain,
        init={c: rng.choice(domain) for c in sorted(all_cells)},
        functions={name: {row: rng.choice(domain) for row in rows(arity)}
                   for name, arity in sorted(functions.items())},
        predicates={name: {row: rng.random() < 0.5 for row in rows(arity)}
                    for name, arity in sorted(predicates.items())},
    )


# ---------------------------------------------------------------------------
# JSON loading


def interpretation_from_json(data: Mapping) -> Interpretation:
    """Build an interpretation from parsed JSON.

    Expected shape::

        {"domain": ["v0", "v1"],
         "init": {"cell": "v0"},
         "functions": {"f": [[["v0"], "v1"], ...]},
         "predicates": {"gt": [[["v0", "v1"], false], ...]}}
    """
    try:
        domain = tuple(data["domain"])
        functions = {name: {tuple(args): value for args, value in rows}
                     for name, rows in data.get("functions", {}).items()}
        predicates = {name: {tuple(args): bool(value) for args, value in rows}
                      for name, rows in data.get("predicates", {}).items()}
        return Interpretation(domain, dict(data.get("init", {})),
                              functions, predicates)
    except (KeyError, TypeError, ValueError) as err:
        raise EvalError(f"malformed interpretation: {err}") from err


def execution_from_json(data: Mapping) -> LassoExecution:
    """Build a lasso execution from parsed JSON.

    Steps look like ``{"inputs": {"voteA": true}, "updates":
    {"winner": "A()"}}``; update values are function term strings.
    """

    def step(obj):
        try:
            inputs = dict(obj.get("inputs", {}))
            updates = {cell: parse_term_text(text)
                       for cell, text in obj.get("updates", {}).items()}
        except (AttributeError, TypeError) as err:
            raise EvalError(f"malformed execution step: {obj!r}") from err
        return LassoStep(inputs, updates)

    return LassoExecution(tuple(step(s) for s in data.get("stem", ())),
                          tuple(step(s) for s in data.get("loop", ())))


def trace_from_json(data: Mapping) -> LassoTrace:
    """Build a lasso trace from parsed JSON lists of atomic propositions."""

    def position(aps):
        return frozenset(parse_ap_text(text) for text in aps)

    return LassoTrace(tuple(position(p) for p in data.get("stem", ())),
                      tuple(position(p) for p in data.get("loop", ())))


def load_json_file(path) -> object:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)
