"""Mealy control strategies and winning-region repair.

A winning region is a nondeterministic Mealy machine containing every
strategy that realizes a trace specification.  Where it leaves several
(output, successor) options for one state-input pair, those options are
*free choices*; a repair picks one option per choice so that the pruned
machine also satisfies a universal hyperproperty.  Checking a candidate
reduces to LTL model checking of the machine's k-fold self-composition
against the property body with copy-indexed atoms.
"""

import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product as iproduct
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from .approx import syntactic_conversion
from .automata import TransitionSystem, model_check
from .semantics import LassoTrace
from .syntax import (
    And,
    HyperTslFormula,
    Implies,
    Leaf,
    PredicateAp,
    TslError,
    UpdateAp,
    UpdateTerm,
    map_leaves,
    parse_ap_text,
    parse_term_text,
    print_ap,
    strip_copy,
    with_copy,
)


class MachineError(TslError):
    """An invalid machine file, or a property the machine cannot interpret."""


Transition = Tuple[str, FrozenSet[PredicateAp], FrozenSet[UpdateAp], str]


@dataclass(frozen=True)
class MealyMachine:
    """A finite-state transducer over predicate inputs and update outputs.

    ``transitions`` holds (state, input valuation, output valuation, state)
    quadruples; an input valuation lists the atoms that hold, all other
    declared inputs are false.  Every transition updates each cell exactly
    once.  A state-input pair with no transition means the environment never
    plays that input there.
    """

    states: Tuple[str, ...]
    initial: str
    inputs: Tuple[PredicateAp, ...]
    cells: Tuple[str, ...]
    transitions: Tuple[Transition, ...]

    @property
    def output_atoms(self) -> Tuple[UpdateAp, ...]:
        seen = {ap for _, _, out, _ in self.transitions for ap in out}
        return tuple(sorted(seen, key=print_ap))

    @property
    def universe(self) -> Tuple:
        return tuple(self.inputs) + self.output_atoms

    def by_state_input(self) -> Dict[Tuple[str, FrozenSet], List[Tuple]]:
        groups: Dict[Tuple[str, FrozenSet], List[Tuple]] = {}
        for src, inp, out, dst in self.transitions:
            groups.setdefault((src, inp), []).append((out, dst))
        return groups


@dataclass(frozen=True)
class FreeChoice:
    """A state-input pair the winning region leaves unresolved: at least two
    distinct (output valuation, successor) options."""

    state: str
    input: FrozenSet[PredicateAp]
    options: Tuple[Tuple[FrozenSet[UpdateAp], str], ...]


@dataclass(frozen=True)
class Refinement:
    """A machine obtained by keeping one option per free choice.

    ``picks`` records the retained transition of every choice, in choice
    order.
    """

    machine: MealyMachine
    picks: Tuple[Transition, ...]


REPAIRED = "repaired"
ALREADY_HOLDS = "already_holds"
NO_REPAIR = "no_repair"


@dataclass(frozen=True)
class RepairReport:
    """Outcome of a repair run.

    ``mc_calls`` counts every model-checking invocation including the
    initial whole-machine check; ``candidates_tried`` counts refinement
    candidates only.  ``verdicts`` lists the per-candidate results in
    enumeration order when every candidate was evaluated.
    """

    outcome: str
    refinement: Optional[Refinement]
    mc_calls: int
    candidates_total: int
    candidates_tried: int
    choices: Tuple[FreeChoice, ...] = ()
    verdicts: Optional[Tuple[bool, ...]] = None
    counterexample: Optional[Tuple[LassoTrace, ...]] = None


# ---------------------------------------------------------------------------
# loading and serialization


def _no_duplicate_keys(pairs):
    keys = [k for k, _ in pairs]
    if len(keys) != len(set(keys)):
        dupes = sorted({k for k in keys if keys.count(k) > 1})
        raise MachineError(f"duplicate keys in machine file: {dupes}")
    return dict(pairs)


def load_machine(source) -> MealyMachine:
    """Parse and validate a machine from JSON text or an already-parsed dict.

    Validation enforces the type invariants: declared alphabets, exactly one
    update per cell per transition, no reachable dead ends.  Unreachable
    states are dropped with a warning.
    """
    if isinstance(source, str):
        try:
            data = json.loads(source, object_pairs_hook=_no_duplicate_keys)
        except json.JSONDecodeError as err:
            raise MachineError(f"machine file is not valid JSON: {err}")
    else:
        data = source
    missing = {"cells", "inputs", "states", "initial",
               "transitions"} - set(data)
    if missing:
        raise MachineError(f"machine file lacks keys: {sorted(missing)}")

    cells = tuple(data["cells"])
    if len(set(cells)) != len(cells):
        raise MachineError("duplicate cell names")
    states = tuple(data["states"])
    if not states:
        raise MachineError("machine needs at least one state")
    if len(set(states)) != len(states):
        raise MachineError("duplicate state names")
    initial = data["initial"]
    if initial not in states:
        raise MachineError(f"initial state {initial!r} is not a state")

    inputs = []
    for text in data["inputs"]:
        ap = parse_ap_text(text)
        if not isinstance(ap, PredicateAp) or ap.copy is not None:
            raise MachineError(f"input {text!r} is not a predicate atom")
        inputs.append(ap)
    if len(set(inputs)) != len(inputs):
        raise MachineError("duplicate input atoms")
    declared = set(inputs)

    transitions = []
    for entry in data["transitions"]:
        src, dst = entry.get("from"), entry.get("to")
        if src not in states or dst not in states:
            raise MachineError(f"transition endpoint {src!r} -> {dst!r} "
                               "references an unknown state")
        valuation = set()
        for text in entry.get("input", ()):
            ap = parse_ap_text(text)
            if ap not in declared:
                raise MachineError(
                    f"transition input {text!r} is not a declared input atom")
            valuation.add(ap)
        updates = entry.get("updates", {})
        unknown = set(updates) - set(cells)
        if unknown:
            raise MachineError(f"updates for unknown cells: {sorted(unknown)}")
        absent = set(cells) - set(updates)
        if absent:
            raise MachineError(
                f"transition from {src!r} misses updates for cells "
                f"{sorted(absent)}: every cell is assigned exactly once")
        out = frozenset(UpdateAp(UpdateTerm(cell, parse_term_text(updates[cell])))
                        for cell in cells)
        transitions.append((src, frozenset(valuation), out, dst))
    transitions = tuple(dict.fromkeys(transitions))

    reachable = {initial}
    frontier = [initial]
    while frontier:
        here = frontier.pop()
        for src, _, _, dst in transitions:
            if src == here and dst not in reachable:
                reachable.add(dst)
                frontier.append(dst)
    dropped = [s for s in states if s not in reachable]
    if dropped:
        warnings.warn(f"unreachable machine states dropped: {dropped}")
        states = tuple(s for s in states if s in reachable)
        transitions = tuple(t for t in transitions if t[0] in reachable)

    outgoing = {src for src, _, _, _ in transitions}
    dead = [s for s in states if s not in outgoing]
    if dead:
        raise MachineError(
            f"dead-end states {dead}: every reachable state needs an "
            "outgoing transition, trace semantics is over infinite words")

    return MealyMachine(states, initial, tuple(inputs), cells, transitions)


def machine_to_json(machine: MealyMachine) -> dict:
    """The JSON document form of a machine (inverse of :func:`load_machine`)."""
    def term_text(ap: UpdateAp) -> str:
        return print_ap(ap)[1:-1].split(" <- ", 1)[1]

    return {
        "cells": list(machine.cells),
        "inputs": [print_ap(ap) for ap in machine.inputs],
        "states": list(machine.states),
        "initial": machine.initial,
        "transitions": [
            {"from": src,
             "input": sorted(print_ap(ap) for ap in inp),
             "updates": {ap.term.cell: term_text(ap) for ap in sorted(out, key=print_ap)},
             "to": dst}
            for src, inp, out, dst in machine.transitions],
    }


# ---------------------------------------------------------------------------
# free choices and refinements


def _input_key(valuation) -> str:
    return " ".join(sorted(print_ap(ap) for ap in valuation))


def _option_key(option) -> Tuple[str, str]:
    out, dst = option
    return (" ".join(sorted(print_ap(ap) for ap in out)), dst)


def free_choices(machine: MealyMachine) -> List[FreeChoice]:
    """The state-input pairs with several distinct options, sorted by state
    (declaration order) and input valuation."""
    order = {s: i for i, s in enumerate(machine.states)}
    found = []
    for (src, inp), options in machine.by_state_input().items():
        distinct = sorted(set(options), key=_option_key)
        if len(distinct) >= 2:
            found.append(FreeChoice(src, inp, tuple(distinct)))
    found.sort(key=lambda c: (order[c.state], _input_key(c.input)))
    return found


def enumerate_refinements(machine: MealyMachine,
                          choices: List[FreeChoice]) -> Iterator[Refinement]:
    """All ways of keeping exactly one option per free choice.

    Candidates appear in lexicographic order over the sorted choices with
    their sorted options; a machine without choices yields itself once.
    """
    if not choices:
        yield Refinement(machine, ())
        return
    keys = {(c.state, c.input) for c in choices}
    fixed = tuple(t for t in machine.transitions
                  if (t[0], t[1]) not in keys)
    for combo in iproduct(*(c.options for c in choices)):
        picks = tuple((c.state, c.input, out, dst)
                      for c, (out, dst) in zip(choices, combo))
        refined = MealyMachine(machine.states, machine.initial,
                               machine.inputs, machine.cells,
                               fixed + picks)
        yield Refinement(refined, picks)


def is_refinement(base: MealyMachine, candidate: MealyMachine) -> bool:
    """Structural refinement test: same interface, a sub-relation of the
    base transitions, and every served state-input pair still served."""
    if (candidate.states != base.states or candidate.initial != base.initial
            or candidate.inputs != base.inputs
            or candidate.cells != base.cells):
        return False
    if not set(candidate.transitions) <= set(base.transitions):
        return False
    served = {(src, inp) for src, inp, _, _ in candidate.transitions}
    return all((src, inp) in served for src, inp, _, _ in base.transitions)


# ---------------------------------------------------------------------------
# self-composition and hyperproperty checking


def _composed_parts(machine: MealyMachine, k: int):
    """Self-composition pieces with each edge keyed by its transition combo.

    Returns ``(states, initial, universe, entries)`` where an entry is
    ``(combo, src, label, dst)``; keeping the combo lets a caller carve the
    composition of any refinement out of the base machine's composition by
    edge filtering instead of recomposing.  Equal labels are pooled so
    later per-letter caches hit on identity.
    """
    if k < 1:
        raise MachineError("self-composition needs at least one copy")
    universe = tuple(with_copy(ap, j)
                     for j in range(1, k + 1) for ap in machine.universe)
    by_state: Dict[str, List[Transition]] = {s: [] for s in machine.states}
    for t in machine.transitions:
        by_state[t[0]].append(t)

    states = tuple(iproduct(machine.states, repeat=k))
    pool: Dict[FrozenSet, FrozenSet] = {}
    entries = []
    for src in states:
        for combo in iproduct(*(by_state[q] for q in src)):
            label = frozenset(
                with_copy(ap, j + 1)
                for j, (_, inp, out, _) in enumerate(combo)
                for ap in (inp | out))
            label = pool.setdefault(label, label)
            entries.append((combo, src, label, tuple(t[3] for t in combo)))
    return states, (machine.initial,) * k, universe, entries


def self_compose(machine: MealyMachine, k: int) -> TransitionSystem:
    """The synchronous k-fold self-composition as a transition system.

    States are k-tuples of machine states; each copy takes one of its own
    transitions per step, with independent inputs, and the edge label is the
    union of copy-indexed input and output atoms (copies are 1-based).  The
    full state grid is kept; checks only ever explore from the initial
    tuple.
    """
    states, initial, universe, entries = _composed_parts(machine, k)
    return TransitionSystem(states, initial, universe,
                            tuple((src, label, dst)
                                  for _, src, label, dst in entries))


def _indexed_body(formula: HyperTslFormula, machine: MealyMachine,
                  extra=()):
    """The property body with each tagged leaf mapped to a copy-indexed
    atom, after converting term leaves to atoms."""
    if any(kind != "forall" for kind, _ in formula.prefix):
        raise MachineError("machine checks need a purely universal prefix")
    if not formula.prefix:
        raise MachineError("machine checks need a quantified property")
    index = {v: j + 1 for j, v in enumerate(formula.variables)}
    known = set(machine.universe) | set(extra)
    body = syntactic_conversion(formula.body)

    def to_atom(leaf: Leaf) -> Leaf:
        if leaf.trace is None:
            raise MachineError("untagged leaf in a quantified property")
        ap = leaf.term
        if ap.copy is not None:
            raise MachineError("property atoms must not carry copy indices")
        if ap not in known:
            raise MachineError(
                f"property atom {print_ap(ap)} is not part of the machine's "
                "alphabet")
        return Leaf(with_copy(ap, index[leaf.trace]))

    return map_leaves(body, to_atom), len(formula.prefix)


def _subgoals(body) -> List:
    """Top-level conjuncts of the property body, with implications
    distributed over conjunctive consequents.

    Checking each subgoal separately is equivalent for universal path
    quantification and keeps the per-goal automata small; assumption-guarded
    properties (assume -> g1 && g2) become one guarded goal per guarantee.
    """
    goals = [body]
    changed = True
    while changed:
        changed = False
        out = []
        for g in goals:
            if isinstance(g, And):
                out.extend((g.left, g.right))
                changed = True
            elif isinstance(g, Implies) and isinstance(g.right, And):
                out.append(Implies(g.left, g.right.left))
                out.append(Implies(g.left, g.right.right))
                changed = True
            else:
                out.append(g)
        goals = out
    return goals


def _split_witness(witness: LassoTrace, k: int) -> Tuple[LassoTrace, ...]:
    """One machine trace per copy, from a composed counterexample lasso."""
    def part(j: int) -> LassoTrace:
        def strip(vals):
            return tuple(frozenset(strip_copy(ap) for ap in v if ap.copy == j)
                         for v in vals)
        return LassoTrace(strip(witness.stem), strip(witness.loop))
    return tuple(part(j) for j in range(1, k + 1))


def _run_goals(ts: TransitionSystem, goals, k: int):
    """Model-check the goals in order; (holds, split witness, calls made)."""
    calls = 0
    for goal in goals:
        calls += 1
        holds, witness = model_check(ts, goal)
        if not holds:
            return False, _split_witness(witness, k), calls
    return True, None, calls


def _checked_models(machine: MealyMachine, formula: HyperTslFormula,
                    alphabet=()):
    """check_models plus the number of model-check invocations made."""
    extra = tuple(ap for ap in alphabet if ap not in set(machine.universe))
    body, k = _indexed_body(formula, machine, extra)
    ts = self_compose(machine, k)
    if extra:
        indexed = tuple(with_copy(ap, j)
                        for j in range(1, k + 1) for ap in extra)
        ts = TransitionSystem(ts.states, ts.initial,
                              ts.universe + indexed, ts.edges)
    return _run_goals(ts, _subgoals(body), k)


def check_models(machine: MealyMachine, formula: HyperTslFormula, *,
                 alphabet=()) -> Tuple[bool, Optional[Tuple[LassoTrace, ...]]]:
    """Does every k-tuple of machine traces satisfy the universal property?

    HyperTSL properties are checked through their propositional reading
    (term leaves become atoms compared syntactically); a positive answer
    transfers to the stream semantics, a counterexample is decomposed into
    one lasso trace per quantified variable.  The body is checked one
    top-level conjunct at a time (assumption implications distributed),
    stopping at the first violated conjunct.

    Atoms outside the machine's alphabet are an error rather than silently
    false; ``alphabet`` admits extra atoms as known but never true, which
    lets a refinement that dropped an output atom from every transition
    still be checked against a property mentioning it.
    """
    holds, witness, _ = _checked_models(machine, formula, alphabet)
    return holds, witness


# ---------------------------------------------------------------------------
# repair


def _check_candidate(args) -> Tuple[bool, int]:
    machine, formula, alphabet = args
    holds, _, calls = _checked_models(machine, formula, alphabet)
    return holds, calls


def repair(machine: MealyMachine, formula: HyperTslFormula,
           mode: str = "first", jobs: int = 1) -> RepairReport:
    """Resolve the machine's free choices so the property holds.

    Checks the unrefined machine first; if it violates the property,
    candidates from :func:`enumerate_refinements` are checked in order.
    ``mode="first"`` stops at the first satisfying candidate, ``mode="all"``
    evaluates every candidate and reports the verdict list (the returned
    refinement is still the enumeration-minimal passing one).  ``jobs``
    spreads candidate checks over worker processes; results are consumed in
    enumeration order either way, so the outcome is deterministic.
    """
    if mode not in ("first", "all"):
        raise MachineError(f"unknown repair mode {mode!r}")
    choices = free_choices(machine)
    total = 1
    for c in choices:
        total *= len(c.options)

    # The composition is built once from the base machine; each candidate's
    # composition is the subset of entries whose transitions all survived
    # the refinement.  Candidates thereby share edge labels (and the
    # per-letter work the model checker caches against them).
    body, k = _indexed_body(formula, machine)
    goals = _subgoals(body)
    states, initial, universe, entries = _composed_parts(machine, k)

    def system_for(transitions) -> TransitionSystem:
        kept = set(transitions)
        return TransitionSystem(states, initial, universe, tuple(
            (src, label, dst) for combo, src, label, dst in entries
            if all(t in kept for t in combo)))

    holds, counterexample, initial_calls = _run_goals(
        system_for(machine.transitions), goals, k)
    if holds:
        return RepairReport(ALREADY_HOLDS, None, initial_calls, total, 0,
                            tuple(choices))

    mc_calls = initial_calls
    verdicts: List[bool] = []
    best: Optional[Refinement] = None
    base_alphabet = machine.universe

    def consume(results) -> None:
        nonlocal mc_calls, best
        for refinement, (ok, calls) in results:
            mc_calls += calls
            verdicts.append(ok)
            if ok and best is None:
                best = refinement
                if mode == "first":
                    return

    if jobs > 1:
        pool = ProcessPoolExecutor(max_workers=jobs)
        try:
            args = ((r.machine, formula, base_alphabet)
                    for r in enumerate_refinements(machine, choices))
            results = pool.map(_check_candidate, args)
            consume(zip(enumerate_refinements(machine, choices), results))
        finally:
            pool.shutdown(wait=True, cancel_futures=True)
    else:
        def checked(r: Refinement) -> Tuple[bool, int]:
            ok, _, calls = _run_goals(
                system_for(r.machine.transitions), goals, k)
            return ok, calls

        consume((r, checked(r))
                for r in enumerate_refinements(machine, choices))

    tried = len(verdicts)
    if best is None:
        return RepairReport(NO_REPAIR, None, mc_calls, total, tried,
                            tuple(choices), tuple(verdicts), counterexample)
    return RepairReport(REPAIRED, best, mc_calls, total, tried,
                        tuple(choices),
                        tuple(verdicts) if mode == "all" else None,
                        counterexample)
