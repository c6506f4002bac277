"""Pseudo-hyperproperty detection and existential (un)realizability.

A universally quantified hyperproperty is *pseudo* when it is equivalent to
checking one trace formula on every trace in isolation, i.e. when the
quantifiers add nothing.  Detection reduces to satisfiability of an
exists-forall formula, which this module decides exactly for ultimately
periodic trace sets by unrolling the universal block over the existential
witnesses and zipping the result onto a copy-indexed alphabet.

The same machinery powers two realizability helpers: a sound unrealizability
check for purely existential specifications (via a strategy-closure encoding)
and a bounded strategy enumeration for specifications that pin down the
controller with a local-determinism conjunct.
"""

from dataclasses import dataclass
from itertools import product
from typing import Optional, Tuple

from .approx import translate_formula
from .automata import ltl_sat
from .semantics import LassoTrace, eval_hyperltl
from .syntax import (
    FALSE,
    TRUE,
    And,
    Apply,
    Globally,
    HyperTslFormula,
    Iff,
    Implies,
    Leaf,
    Not,
    Or,
    PlainAp,
    PredicateAp,
    PredicateTerm,
    SymbolRef,
    TslError,
    UpdateAp,
    UpdateTerm,
    WeakUntil,
    collect_terms,
    iter_leaves,
    map_leaves,
    print_ap,
    print_term,
    retag_formula,
    tag_formula,
    with_copy,
)


class PseudoError(TslError):
    """A formula falls outside the fragment an operation can handle."""


PSEUDO = "pseudo"
NOT_PSEUDO = "not_pseudo"
UNKNOWN = "unknown"

UNREALIZABLE = "Unrealizable"
REALIZABILITY_UNKNOWN = "Unknown"


@dataclass(frozen=True)
class PseudoVerdict:
    """Outcome of a pseudo-hyperproperty check.

    ``pseudo`` verdicts carry the collapsed single-trace formula;
    ``not_pseudo`` verdicts carry a finite witness trace set: every trace in
    it satisfies the collapsed formula on its own, yet together they violate
    the original property.  ``unknown`` carries nothing.
    """

    kind: str
    collapsed: Optional[object] = None
    witnesses: Optional[Tuple[LassoTrace, ...]] = None

    @property
    def is_pseudo(self) -> bool:
        return self.kind == PSEUDO

    @property
    def is_not_pseudo(self) -> bool:
        return self.kind == NOT_PSEUDO

    @property
    def is_unknown(self) -> bool:
        return self.kind == UNKNOWN


def _and_chain(parts):
    out = None
    for p in parts:
        out = p if out is None else And(out, p)
    return TRUE if out is None else out


def _require_quantified(formula) -> HyperTslFormula:
    if not isinstance(formula, HyperTslFormula):
        raise PseudoError("expected a quantified formula")
    return formula


def _require_universal(formula) -> HyperTslFormula:
    formula = _require_quantified(formula)
    if any(kind != "forall" for kind, _ in formula.prefix):
        raise PseudoError("expected a purely universal quantifier prefix")
    return formula


def _fresh_variable(taken, base: str = "pi") -> str:
    name = base
    while name in taken:
        name += "_"
    return name


def collapse(formula) -> HyperTslFormula:
    """Unify all universal trace variables of ``formula`` into one.

    The result is the single-trace reading of the property: what it says
    about each trace separately, with every cross-trace comparison turned
    reflexive.
    """
    formula = _require_universal(formula)
    if len(formula.prefix) <= 1:
        return formula
    variables = formula.variables
    target = variables[0]
    mapping = {v: target for v in variables}
    return HyperTslFormula((("forall", target),),
                           retag_formula(formula.body, mapping),
                           formula.flavor)


def build_pseudo_check(formula) -> HyperTslFormula:
    """The satisfiability query deciding whether ``formula`` is pseudo.

    For a universal property with body ``psi`` over variables ``p1..pn`` the
    check is ``exists p1..pn. forall q. !psi && psi[p1 -> q, .., pn -> q]``:
    a trace set whose members each pass the collapsed formula alone while the
    set as a whole fails the property.  The check is satisfiable exactly when
    ``formula`` is not pseudo.
    """
    formula = _require_universal(formula)
    variables = formula.variables
    if not variables:
        raise PseudoError("expected at least one quantifier")
    fresh = _fresh_variable(set(variables))
    collapsed_body = retag_formula(formula.body, {v: fresh for v in variables})
    prefix = tuple(("exists", v) for v in variables) + (("forall", fresh),)
    return HyperTslFormula(prefix, And(Not(formula.body), collapsed_body),
                           formula.flavor)


def _split_exists_forall(formula) -> Tuple[tuple, tuple]:
    kinds = [kind for kind, _ in formula.prefix]
    split = 0
    while split < len(kinds) and kinds[split] == "exists":
        split += 1
    if any(kind != "forall" for kind in kinds[split:]):
        raise PseudoError(
            "prefix must be a block of exists followed by a block of foralls")
    variables = formula.variables
    return variables[:split], variables[split:]


def decide_exists_forall_sat(formula):
    """Decide satisfiability of an exists*-forall* formula over trace sets.

    Returns ``(True, witnesses)`` with one lasso trace per existential
    variable, or ``(False, None)``.  The universal block is unrolled over the
    existential witnesses (sound because universal quantification only
    shrinks under subsets, so the witnesses alone form a model whenever any
    set does); the unrolled conjunction is then a one-trace question over a
    copy-indexed alphabet, answered by the automata backend.
    """
    formula = _require_quantified(formula)
    exists_vars, forall_vars = _split_exists_forall(formula)
    if not exists_vars:
        # The empty trace set satisfies every universal property.
        return True, ()

    has_terms = has_aps = False
    for leaf in iter_leaves(formula):
        if isinstance(leaf.term, (PredicateAp, UpdateAp, PlainAp)):
            has_aps = True
        else:
            has_terms = True
    if has_terms and has_aps:
        raise PseudoError("formula mixes term leaves and atomic propositions")

    conjuncts = []
    seen = set()
    if forall_vars:
        for choice in product(exists_vars, repeat=len(forall_vars)):
            mapping = dict(zip(forall_vars, choice))
            instance = retag_formula(formula.body, mapping)
            if instance not in seen:
                seen.add(instance)
                conjuncts.append(instance)
    else:
        conjuncts.append(formula.body)
    unrolled = _and_chain(conjuncts)

    index = {v: i for i, v in enumerate(exists_vars)}

    def zip_leaf(leaf: Leaf) -> Leaf:
        if leaf.arg_traces is not None:
            raise PseudoError("per-argument tags are not supported here")
        if leaf.trace is None or leaf.trace not in index:
            raise PseudoError(f"leaf tagged {leaf.trace!r} after unrolling")
        term = leaf.term
        if isinstance(term, PredicateTerm):
            term = PredicateAp(term)
        elif isinstance(term, UpdateTerm):
            term = UpdateAp(term)
        return Leaf(with_copy(term, index[leaf.trace]))

    sat, witness = ltl_sat(map_leaves(unrolled, zip_leaf))
    if not sat:
        return False, None

    def atom(ap):
        bare = with_copy(ap, None)
        # Term-leaf formulas get their witnesses back in the same alphabet,
        # so eval_hyperltl can confirm them against the original formula.
        return bare.term if has_terms else bare

    def project(i: int) -> LassoTrace:
        def part(vals):
            return tuple(frozenset(atom(ap) for ap in v if ap.copy == i)
                         for v in vals)
        return LassoTrace(part(witness.stem), part(witness.loop))

    return True, tuple(project(i) for i in range(len(exists_vars)))


def is_pseudo_hyperltl(formula) -> PseudoVerdict:
    """Decide whether a universal HyperLTL formula is a pseudo-hyperproperty.

    Complete over ultimately periodic trace sets: the answer is always
    ``pseudo`` (with the collapsed trace formula) or ``not_pseudo`` (with a
    witness trace set), never ``unknown``.
    """
    formula = _require_universal(formula)
    if len(formula.prefix) <= 1:
        return PseudoVerdict(PSEUDO, collapsed=collapse(formula))
    sat, witnesses = decide_exists_forall_sat(build_pseudo_check(formula))
    if sat:
        return PseudoVerdict(NOT_PSEUDO, witnesses=witnesses)
    return PseudoVerdict(PSEUDO, collapsed=collapse(formula))


def _context_body(context):
    if context is None:
        return None
    if isinstance(context, HyperTslFormula):
        if context.prefix:
            raise PseudoError("context must be quantifier-free")
        return context.body
    return context


def is_pseudo_hypertsl(formula, context=None) -> PseudoVerdict:
    """One-directional pseudo check for universal HyperTSL.

    ``context`` (a quantifier-free system description, e.g. the conjunction
    of a specification's obligations) is tagged with every universal variable
    and conjoined before checking, so the verdict speaks about traces of that
    system rather than arbitrary ones.  The propositional approximation being
    pseudo implies the original is; the converse fails, so a negative answer
    degrades to ``unknown``.
    """
    formula = _require_universal(formula)
    if formula.flavor == "rel":
        raise PseudoError(
            "per-argument trace tags have no propositional approximation")
    body = formula.body
    context = _context_body(context)
    if context is not None:
        parts = [tag_formula(context, v) for v in formula.variables]
        body = _and_chain(parts + [body])
    combined = HyperTslFormula(formula.prefix, body, formula.flavor)
    verdict = is_pseudo_hyperltl(translate_formula(combined))
    if verdict.is_pseudo:
        return PseudoVerdict(PSEUDO, collapsed=collapse(combined))
    return PseudoVerdict(UNKNOWN)


# ---------------------------------------------------------------------------
# existential realizability


def _rename_term(term, mapping):
    if isinstance(term, SymbolRef):
        return SymbolRef(mapping[term.name])
    if isinstance(term, Apply):
        return Apply(term.symbol,
                     tuple(_rename_term(a, mapping) for a in term.args))
    if isinstance(term, PredicateTerm):
        if not term.application:
            return PredicateTerm(mapping[term.symbol], (), False)
        return PredicateTerm(term.symbol,
                             tuple(_rename_term(a, mapping) for a in term.args),
                             True)
    if isinstance(term, UpdateTerm):
        return UpdateTerm(mapping[term.cell], _rename_term(term.term, mapping))
    raise PseudoError(f"cannot rename term {term!r}")


def _copy_mappings(streams, count: int):
    """Per-copy stream renamings ``name -> name_i`` (1-based), dodging any
    stream that already carries the suffixed name."""
    used = set(streams)
    mappings = []
    for i in range(1, count + 1):
        mapping = {}
        for s in sorted(streams):
            sep = "_"
            candidate = f"{s}{sep}{i}"
            while candidate in used:
                sep += "_"
                candidate = f"{s}{sep}{i}"
            used.add(candidate)
            mapping[s] = candidate
        mappings.append(mapping)
    return mappings


def _pred_key(term: PredicateTerm):
    return (term.symbol, tuple(print_term(a) for a in term.args))


def exists_encoding(formula):
    """Encode an existential HyperTSL formula as one quantifier-free formula.

    Every stream is cloned per trace variable and the body's tags are dropped
    onto the clones.  Conjoined strategy-closure constraints say that any two
    clones keep choosing identical updates until their predicate evaluations
    have differed: traces produced by a single strategy cannot diverge
    earlier.  The encoding is satisfiable whenever some strategy's trace set
    contains witnesses for the original formula.
    """
    formula = _require_quantified(formula)
    if formula.flavor == "rel":
        raise PseudoError("per-argument tags are not supported here")
    if not formula.prefix:
        raise PseudoError("expected at least one quantifier")
    if any(kind != "exists" for kind, _ in formula.prefix):
        raise PseudoError("expected a purely existential quantifier prefix")

    variables = formula.variables
    terms = collect_terms(formula)
    streams = terms.inputs | terms.cells
    mappings = _copy_mappings(streams, len(variables))
    by_var = dict(zip(variables, mappings))

    def clone_leaf(leaf: Leaf) -> Leaf:
        if leaf.trace is None:
            raise PseudoError("untagged leaf in a quantified formula")
        return Leaf(_rename_term(leaf.term, by_var[leaf.trace]))

    body = map_leaves(formula.body, clone_leaf)

    updates = sorted(terms.updates, key=lambda u: (u.cell, print_term(u.term)))
    predicates = sorted(terms.predicates, key=_pred_key)

    def closure(mi, mj):
        agree = _and_chain(
            Iff(Leaf(_rename_term(u, mi)), Leaf(_rename_term(u, mj)))
            for u in updates)
        diverged = None
        for p in predicates:
            d = Not(Iff(Leaf(_rename_term(p, mi)), Leaf(_rename_term(p, mj))))
            diverged = d if diverged is None else Or(diverged, d)
        return WeakUntil(agree, FALSE if diverged is None else diverged)

    parts = [body]
    for mi in mappings:
        for mj in mappings:
            parts.append(closure(mi, mj))
    return _and_chain(parts)


def check_exists_unrealizable(formula) -> str:
    """Sound unrealizability test for existential HyperTSL.

    When the propositional approximation of the strategy-closure encoding is
    unsatisfiable, no strategy can produce the required witness traces and
    the formula is unrealizable.  A satisfiable approximation proves nothing
    (it may be spurious), so the answer degrades to ``Unknown``.
    """
    encoded = exists_encoding(formula)
    sat, _ = ltl_sat(translate_formula(encoded))
    return REALIZABILITY_UNKNOWN if sat else UNREALIZABLE


# ---------------------------------------------------------------------------
# strategy enumeration under a local-determinism conjunct


@dataclass(frozen=True)
class StrategyDecision:
    """Result of the positional-strategy search.

    ``strategy`` maps each predicate valuation (a frozenset of the observed
    atoms) to the chosen output atoms, as a tuple of pairs in enumeration
    order; ``None`` when no candidate survived.  ``bounded`` records that
    validation ran over lassos of bounded shape only, in both directions: a
    reported strategy was checked on the bounded trace set, and "none" means
    none survived that same bounded check.
    """

    strategy: Optional[tuple]
    candidates: int
    bounded: bool = True

    @property
    def found(self) -> bool:
        return self.strategy is not None

    def as_dict(self) -> Optional[dict]:
        return None if self.strategy is None else dict(self.strategy)


def _propositional(f):
    """Rewrite term leaves to atomic propositions, keeping tags; plain and
    already-converted atoms pass through."""

    def convert(leaf: Leaf) -> Leaf:
        if leaf.arg_traces is not None:
            raise PseudoError("per-argument tags are not supported here")
        term = leaf.term
        if isinstance(term, PredicateTerm):
            return Leaf(PredicateAp(term), trace=leaf.trace)
        if isinstance(term, UpdateTerm):
            return Leaf(UpdateAp(term), trace=leaf.trace)
        return leaf

    return map_leaves(f, convert)


def _conjuncts_of(f):
    out = []
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, And):
            stack.append(node.right)
            stack.append(node.left)
        else:
            out.append(node)
    return out


def _agreement_atoms(f, variables):
    """Parse a conjunction of ``x@p <-> x@p'`` pairs; the set of atoms ``x``,
    or ``None`` when the shape does not match."""
    atoms = []
    for part in _conjuncts_of(f):
        if not isinstance(part, Iff):
            return None
        left, right = part.left, part.right
        if not (isinstance(left, Leaf) and isinstance(right, Leaf)):
            return None
        if left.term != right.term:
            return None
        if {left.trace, right.trace} != set(variables):
            return None
        atoms.append(left.term)
    return atoms


def _match_local_determinism(conjunct, variables):
    """Match ``G(predicate agreement -> update agreement)``; returns the
    (observed, controlled) atom lists or ``None``."""
    if not isinstance(conjunct, Globally):
        return None
    body = conjunct.child
    if not isinstance(body, Implies):
        return None
    observed = _agreement_atoms(body.left, variables)
    controlled = _agreement_atoms(body.right, variables)
    if not observed or not controlled:
        return None
    return observed, controlled


def _output_groups(controlled, include_self: bool):
    """Group the controlled atoms into independent choices.

    Update atoms targeting the same cell form one exactly-one group (with the
    self-update as the default option); every other atom is a free boolean
    output, present or absent.
    """
    cells = {}
    singles = []
    for ap in controlled:
        if isinstance(ap, UpdateAp):
            cells.setdefault(ap.term.cell, []).append(ap)
        else:
            singles.append(ap)
    groups = []
    for cell in sorted(cells):
        options = {frozenset({ap}) for ap in cells[cell]}
        if include_self:
            options.add(frozenset({UpdateAp(UpdateTerm(cell, SymbolRef(cell)))}))
        groups.append(sorted(options, key=_option_key))
    for ap in sorted(singles, key=print_ap):
        groups.append([frozenset(), frozenset({ap})])
    return groups


def _option_key(option):
    return tuple(sorted(print_ap(ap) for ap in option))


def pseudo_realizability_local_determinism(formula, *, stem_bound: int = 1,
                                           loop_bound: int = 2,
                                           max_predicates: int = 6,
                                           include_self: bool = True
                                           ) -> StrategyDecision:
    """Search for a positional strategy realizing a two-trace universal
    property that contains a local-determinism conjunct.

    The conjunct ``G(observations agree -> outputs agree)`` pins the system
    down to positional strategies: maps from predicate valuations to output
    choices.  Those maps are enumerated exhaustively and each candidate's
    induced trace set - all lassos with stem up to ``stem_bound`` and loop up
    to ``loop_bound`` over the valuation alphabet - is evaluated against the
    remaining conjuncts.  The first satisfying strategy in enumeration order
    is returned.  Both the found and the none answer are relative to the
    bounded trace sets (see :class:`StrategyDecision`).  Atoms outside the
    conjunct's alphabet never occur on induced traces, so the remaining
    conjuncts read them as constantly false.
    """
    formula = _require_universal(formula)
    variables = formula.variables
    if len(variables) != 2:
        raise PseudoError(
            "local-determinism search needs exactly two trace variables")
    body = _propositional(formula.body)

    observed = controlled = None
    rest = []
    for conjunct in _conjuncts_of(body):
        if observed is None:
            match = _match_local_determinism(conjunct, variables)
            if match is not None:
                observed, controlled = match
                continue
        rest.append(conjunct)
    if observed is None:
        raise PseudoError("no local-determinism conjunct found")
    observed = sorted(set(observed), key=print_ap)
    if len(observed) > max_predicates:
        raise PseudoError(
            f"too many observed atoms for enumeration ({len(observed)})")

    remainder = HyperTslFormula(formula.prefix, _and_chain(rest),
                                formula.flavor)
    groups = _output_groups(sorted(set(controlled), key=print_ap),
                            include_self)

    valuations = []
    for mask in range(1 << len(observed)):
        valuations.append(frozenset(
            ap for i, ap in enumerate(observed) if mask >> i & 1))
    choices = [frozenset().union(*combo) if combo else frozenset()
               for combo in product(*groups)]

    candidates = 0
    for assignment in product(choices, repeat=len(valuations)):
        candidates += 1
        strategy = tuple(zip(valuations, assignment))
        table = dict(strategy)
        traces = []
        for stem_len in range(stem_bound + 1):
            for loop_len in range(1, loop_bound + 1):
                for seq in product(valuations, repeat=stem_len + loop_len):
                    positions = tuple(v | table[v] for v in seq)
                    traces.append(LassoTrace(positions[:stem_len],
                                             positions[stem_len:]))
        if eval_hyperltl(remainder, traces):
            return StrategyDecision(strategy, candidates)
    return StrategyDecision(None, candidates)
