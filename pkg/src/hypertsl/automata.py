"""LTL-to-Buchi translation and emptiness checking over lasso witnesses.

The pipeline is the classic one: negation normal form, the on-the-fly
tableau construction of Gerth, Peled, Vardi and Wolper, a counting
degeneralisation, and iterative Tarjan emptiness with witness extraction.
Automata are edge labelled: every edge carries one set of atoms that must
hold and one that must not, i.e. a conjunction of literals.  Conjunctions
of literals compose under products by plain union, which keeps the product
code short and makes unsatisfiable product edges detectable on sight.

Two shortcuts matter in practice.  A formula without temporal operators
only constrains the first letter, and ``G beta`` with propositional
``beta`` constrains every letter the same way; both become automata
directly from a disjunctive normal form of the body, skipping the tableau
entirely.  Invariant-heavy specifications hit these paths constantly.

Before any of that runs, ``simplify`` folds constants and propagates unit
literals through boolean connectives (conjoined literals are assumed true
in their sibling conjuncts, disjoined literals false in their sibling
disjuncts).  Propagation stops at temporal operators, which talk about
other instants.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from itertools import count
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .semantics import LassoTrace
from .syntax import (
    And, Eventually, FALSE, FalseConst, Globally, HyperTslFormula, Iff,
    Implies, Leaf, Next, Not, Or, PlainAp, Release, TRUE, TrueConst, TslError,
    Until, WeakUntil, formula_aps, print_ap, print_formula,
)


class AutomataError(TslError):
    """Raised when a formula cannot be turned into an automaton."""


# ---------------------------------------------------------------------------
# Negation normal form


def to_nnf(formula, negate: bool = False):
    """Push negations to the leaves and lower derived operators.

    The result uses only true/false, literals, ``&&``, ``||``, ``X``,
    ``U`` and ``R``.  ``F a`` becomes ``true U a``, ``G a`` becomes
    ``false R a`` and ``a W b`` becomes ``b R (a || b)``.
    """
    t = type(formula)
    if t is TrueConst:
        return FALSE if negate else TRUE
    if t is FalseConst:
        return TRUE if negate else FALSE
    if t is Leaf:
        return Not(formula) if negate else formula
    if t is Not:
        return to_nnf(formula.child, not negate)
    if t is And:
        left, right = to_nnf(formula.left, negate), to_nnf(formula.right, negate)
        if negate:
            return Or(left, right)
        if left is formula.left and right is formula.right:
            return formula
        return And(left, right)
    if t is Or:
        left, right = to_nnf(formula.left, negate), to_nnf(formula.right, negate)
        if negate:
            return And(left, right)
        if left is formula.left and right is formula.right:
            return formula
        return Or(left, right)
    if t is Implies:
        return to_nnf(Or(Not(formula.left), formula.right), negate)
    if t is Iff:
        both = And(formula.left, formula.right)
        neither = And(Not(formula.left), Not(formula.right))
        return to_nnf(Or(both, neither), negate)
    if t is Next:
        child = to_nnf(formula.child, negate)
        if child is formula.child:
            return formula
        return Next(child)
    if t is Until:
        left, right = to_nnf(formula.left, negate), to_nnf(formula.right, negate)
        if negate:
            return Release(left, right)
        if left is formula.left and right is formula.right:
            return formula
        return Until(left, right)
    if t is Release:
        left, right = to_nnf(formula.left, negate), to_nnf(formula.right, negate)
        if negate:
            return Until(left, right)
        if left is formula.left and right is formula.right:
            return formula
        return Release(left, right)
    if t is WeakUntil:
        rewritten = Release(formula.right, Or(formula.left, formula.right))
        return to_nnf(rewritten, negate)
    if t is Eventually:
        return to_nnf(Until(TRUE, formula.child), negate)
    if t is Globally:
        return to_nnf(Release(FALSE, formula.child), negate)
    raise AutomataError(
        f"cannot normalise a {t.__name__}; strip quantifier prefixes first")


def is_temporal_free(formula) -> bool:
    t = type(formula)
    if t in (TrueConst, FalseConst, Leaf):
        return True
    if t is Not:
        return is_temporal_free(formula.child)
    if t in (And, Or, Implies, Iff):
        return is_temporal_free(formula.left) and is_temporal_free(formula.right)
    return False


# ---------------------------------------------------------------------------
# Simplification

_MAX_SIMPLIFY_ROUNDS = 8


def simplify(formula):
    """Constant folding, idempotence and unit propagation, to a fixpoint."""
    current = formula
    for _ in range(_MAX_SIMPLIFY_ROUNDS):
        reduced = _simplify1(current)
        if reduced == current:
            break
        current = reduced
    return current


def _mk_not(f):
    t = type(f)
    if t is TrueConst:
        return FALSE
    if t is FalseConst:
        return TRUE
    if t is Not:
        return f.child
    return Not(f)


def _chain(op, parts):
    result = parts[-1]
    for p in reversed(parts[:-1]):
        result = op(p, result)
    return result


def _literal_key(f):
    """(leaf, polarity) when *f* is a literal, else None."""
    if type(f) is Leaf:
        return f, True
    if type(f) is Not and type(f.child) is Leaf:
        return f.child, False
    return None


def _assume(f, context):
    """Rewrite boolean structure under known literal values.

    ``context`` maps Leaf formulas to booleans that hold at the current
    instant.  Temporal subformulas are left untouched: they talk about
    other instants, where the assumption need not hold.
    """
    t = type(f)
    if t is Leaf:
        if f in context:
            return TRUE if context[f] else FALSE
        return f
    if t is Not:
        return _mk_not(_assume(f.child, context))
    if t in (And, Or, Implies, Iff):
        left = _assume(f.left, context)
        right = _assume(f.right, context)
        if t is And:
            if FALSE in (left, right):
                return FALSE
            if left is TRUE:
                return right
            if right is TRUE:
                return left
            return And(left, right)
        if t is Or:
            if TRUE in (left, right):
                return TRUE
            if left is FALSE:
                return right
            if right is FALSE:
                return left
            return Or(left, right)
        if t is Implies:
            return _assume(Or(Not(f.left), f.right), context)
        return _assume(Or(And(f.left, f.right),
                          And(Not(f.left), Not(f.right))), context)
    return f


def _conjuncts(f):
    if type(f) is And:
        yield from _conjuncts(f.left)
        yield from _conjuncts(f.right)
    else:
        yield f


def _disjuncts(f):
    if type(f) is Or:
        yield from _disjuncts(f.left)
        yield from _disjuncts(f.right)
    else:
        yield f


def _globally_body(f):
    """The body when *f* is an always-shape (``G b`` or ``false R b``)."""
    if type(f) is Globally:
        return f.child
    if type(f) is Release and type(f.left) is FalseConst:
        return f.right
    return None


def _eventually_body(f):
    if type(f) is Eventually:
        return f.child
    if type(f) is Until and type(f.left) is TrueConst:
        return f.right
    return None


def _merge_modal(parts, body_of, wrap, chain_op):
    """Fuse e.g. ``G x && G y`` into ``G (x && y)`` (dually for ``F``/``||``).

    Returns the rewritten part list, preserving first-occurrence order.
    """
    bodies = [body_of(p) for p in parts]
    if sum(b is not None for b in bodies) < 2:
        return parts
    merged_body = _chain(chain_op, [b for b in bodies if b is not None])
    out, placed = [], False
    for part, body in zip(parts, bodies):
        if body is None:
            out.append(part)
        elif not placed:
            out.append(wrap(_simplify1(merged_body)))
            placed = True
    return out


def _simplify_gather(parts, polarity: bool):
    """Shared core of conjunction/disjunction simplification.

    ``polarity`` True means conjunction: literals are asserted, ``true``
    is the unit, ``false`` absorbs.  False means disjunction with all
    roles dualised.
    """
    unit, absorb = (TRUE, FALSE) if polarity else (FALSE, TRUE)
    literals: Dict[Leaf, bool] = {}
    ordered = []
    seen = set()
    for p in parts:
        if p == unit:
            continue
        if p == absorb:
            return None, None  # collapses to the absorbing constant
        key = _literal_key(p)
        if key is not None:
            leaf, pol = key
            value = pol if polarity else not pol
            if literals.get(leaf, value) != value:
                return None, None  # complementary literals
            literals[leaf] = value
        if p not in seen:
            seen.add(p)
            ordered.append(p)
    return ordered, literals


def _simplify_junction(parts, polarity: bool):
    unit = TRUE if polarity else FALSE
    ordered, literals = _simplify_gather(parts, polarity)
    if ordered is None:
        return FALSE if polarity else TRUE
    if literals:
        rewritten = []
        changed = False
        for p in ordered:
            if _literal_key(p) is not None:
                rewritten.append(p)
                continue
            q = _assume(p, literals)
            changed = changed or q != p
            rewritten.append(q)
        if changed:
            flat = []
            for q in rewritten:
                flat.extend(_conjuncts(q) if polarity else _disjuncts(q))
            return _simplify_junction([_simplify1(q) for q in flat], polarity)
        ordered = rewritten
    if polarity:
        ordered = _merge_modal(ordered, _globally_body,
                               lambda b: Release(FALSE, b), And)
        ordered = _merge_modal(ordered, lambda f: f.child if type(f) is Next
                               else None, Next, And)
    else:
        ordered = _merge_modal(ordered, _eventually_body,
                               lambda b: Until(TRUE, b), Or)
        ordered = _merge_modal(ordered, lambda f: f.child if type(f) is Next
                               else None, Next, Or)
    if not ordered:
        return unit
    if len(ordered) == 1:
        return ordered[0]
    return _chain(And if polarity else Or, ordered)


def _simplify1(f):
    t = type(f)
    if t in (TrueConst, FalseConst, Leaf):
        return f
    if t is HyperTslFormula:
        return HyperTslFormula(f.prefix, _simplify1(f.body), f.flavor)
    if t is Not:
        child = _simplify1(f.child)
        if child is f.child and type(child) not in (TrueConst, FalseConst, Not):
            return f
        return _mk_not(child)
    if t is And:
        return _simplify_junction(
            [_simplify1(p) for p in _conjuncts(f)], polarity=True)
    if t is Or:
        return _simplify_junction(
            [_simplify1(p) for p in _disjuncts(f)], polarity=False)
    if t is Implies:
        left, right = _simplify1(f.left), _simplify1(f.right)
        if left is FALSE or right is TRUE or left == right:
            return TRUE
        if left is TRUE:
            return right
        if right is FALSE:
            return _mk_not(left)
        if left is f.left and right is f.right:
            return f
        return Implies(left, right)
    if t is Iff:
        left, right = _simplify1(f.left), _simplify1(f.right)
        if left == right:
            return TRUE
        if left is TRUE:
            return right
        if right is TRUE:
            return left
        if left is FALSE:
            return _mk_not(right)
        if right is FALSE:
            return _mk_not(left)
        if left is f.left and right is f.right:
            return f
        return Iff(left, right)
    if t is Next:
        child = _simplify1(f.child)
        if type(child) in (TrueConst, FalseConst):
            return child
        if child is f.child:
            return f
        return Next(child)
    if t is Until:
        left, right = _simplify1(f.left), _simplify1(f.right)
        if type(right) in (TrueConst, FalseConst):
            return right
        if left is FALSE or left == right:
            return right
        if left is f.left and right is f.right:
            return f
        return Until(left, right)
    if t is WeakUntil:
        left, right = _simplify1(f.left), _simplify1(f.right)
        if right is TRUE or left is TRUE:
            return TRUE
        if right is FALSE:
            return _simplify1(Globally(left))
        if left is FALSE:
            return right
        if left is f.left and right is f.right:
            return f
        return WeakUntil(left, right)
    if t is Release:
        left, right = _simplify1(f.left), _simplify1(f.right)
        if type(right) in (TrueConst, FalseConst):
            return right
        if left is TRUE or left == right:
            return right
        if left is f.left and right is f.right:
            return f
        return Release(left, right)
    if t is Eventually:
        child = _simplify1(f.child)
        if type(child) in (TrueConst, FalseConst):
            return child
        if type(child) is Eventually:
            return child
        if type(child) is Until and type(child.left) is TrueConst:
            return child
        if child is f.child:
            return f
        return Eventually(child)
    if t is Globally:
        child = _simplify1(f.child)
        if type(child) in (TrueConst, FalseConst):
            return child
        if type(child) is Globally:
            return child
        if type(child) is Release and type(child.left) is FalseConst:
            return child
        if child is f.child:
            return f
        return Globally(child)
    raise AutomataError(f"cannot simplify a {t.__name__}")


# ---------------------------------------------------------------------------
# Automata


@dataclass(frozen=True)
class Edge:
    """A transition whose letter must contain ``pos`` and avoid ``neg``."""
    src: object
    pos: FrozenSet
    neg: FrozenSet
    dst: object


@dataclass(frozen=True)
class BuchiAutomaton:
    states: Tuple
    initial: FrozenSet
    accepting: FrozenSet
    edges: Tuple[Edge, ...]

    def adjacency(self) -> Dict[object, List[Edge]]:
        adj: Dict[object, List[Edge]] = {s: [] for s in self.states}
        for edge in self.edges:
            adj[edge.src].append(edge)
        return adj


def _edge(src, pos, neg, dst) -> Optional[Edge]:
    pos, neg = frozenset(pos), frozenset(neg)
    if pos & neg:
        return None
    return Edge(src, pos, neg, dst)


# -- disjunctive normal form (for the temporal-free shortcuts) --------------

_DNF_CAP = 512


def _dnf(f) -> Optional[List[Tuple[FrozenSet, FrozenSet]]]:
    """Satisfiable (pos, neg) literal conjunctions covering *f*, or None.

    None means the formula is not temporal-free or the term count passed
    the cap; callers then fall back to the tableau.
    """
    t = type(f)
    if t is TrueConst:
        return [(frozenset(), frozenset())]
    if t is FalseConst:
        return []
    if t is Leaf:
        return [(frozenset({f.term}), frozenset())]
    if t is Not and type(f.child) is Leaf:
        return [(frozenset(), frozenset({f.child.term}))]
    if t is And:
        left, right = _dnf(f.left), _dnf(f.right)
        if left is None or right is None:
            return None
        out = []
        for p1, n1 in left:
            for p2, n2 in right:
                pos, neg = p1 | p2, n1 | n2
                if pos & neg:
                    continue
                out.append((pos, neg))
                if len(out) > _DNF_CAP:
                    return None
        return out
    if t is Or:
        left, right = _dnf(f.left), _dnf(f.right)
        if left is None or right is None or len(left) + len(right) > _DNF_CAP:
            return None
        return left + right
    return None


# -- tableau -----------------------------------------------------------------


_INIT = -1


def _neg_literal(lit):
    if type(lit) is Leaf:
        return Not(lit)
    return lit.child


def _closure_order(phi) -> Dict[object, int]:
    """Deterministic index for every subformula, by depth-first order."""
    order: Dict[object, int] = {}
    stack = [phi]
    while stack:
        f = stack.pop()
        if f in order:
            continue
        order[f] = len(order)
        t = type(f)
        if t in (And, Or, Until, Release):
            stack.extend((f.right, f.left))
        elif t in (Not, Next):
            stack.append(f.child)
    return order


def _expand_tableau(phi) -> Tuple[Dict[int, dict], List[Tuple[int, int]]]:
    """Expand *phi* (in NNF) into tableau nodes and node-to-node edges.

    A node is a saturated (old, nxt) pair: ``old`` holds the formulas
    asserted at the current instant (literals drive the edge labels,
    composite members drive the acceptance sets) and ``nxt`` the
    obligations deferred to the following instant.  ``expand`` saturates a
    pending-formula set into all such pairs; its results only depend on
    the pending/old/nxt triple, never on how the expansion got there, so
    identical subproblems reached along different disjunctive branches are
    shared through the memo table instead of being re-forked.

    Returns (node id -> {"old", "nxt"}, edge list); the virtual initial
    node is id -1 and occurs only as an edge source.
    """
    order = _closure_order(phi)
    memo: Dict[Tuple, FrozenSet] = {}
    empty = frozenset()

    def expand(new: FrozenSet, old: FrozenSet, nxt: FrozenSet) -> FrozenSet:
        new = new - old
        if not new:
            return frozenset({(old, nxt)})
        key = (new, old, nxt)
        hit = memo.get(key)
        if hit is not None:
            return hit
        eta = min(new, key=order.__getitem__)
        rest = new - {eta}
        t = type(eta)
        if t is TrueConst:
            result = expand(rest, old, nxt)
        elif t is FalseConst:
            result = empty
        elif t is Leaf or t is Not:
            if _neg_literal(eta) in old:
                result = empty
            else:
                result = expand(rest, old | {eta}, nxt)
        else:
            grown = old | {eta}
            if t is And:
                result = expand(rest | {eta.left, eta.right}, grown, nxt)
            elif t is Next:
                result = expand(rest, grown, nxt | {eta.child})
            elif t is Or:
                result = expand(rest | {eta.left}, grown, nxt) | \
                    expand(rest | {eta.right}, grown, nxt)
            elif t is Until:
                result = expand(rest | {eta.left}, grown, nxt | {eta}) | \
                    expand(rest | {eta.right}, grown, nxt)
            elif t is Release:
                result = expand(rest | {eta.right}, grown, nxt | {eta}) | \
                    expand(rest | {eta.left, eta.right}, grown, nxt)
            else:
                raise AutomataError(
                    f"unexpected connective in normal form: {print_formula(eta)}")
        memo[key] = result
        return result

    def canon(keys) -> List[Tuple[FrozenSet, FrozenSet]]:
        return sorted(keys, key=lambda k: (
            tuple(sorted(order[f] for f in k[0])),
            tuple(sorted(order[f] for f in k[1]))))

    key_id: Dict[Tuple[FrozenSet, FrozenSet], int] = {}
    info: Dict[int, dict] = {}
    raw_edges: List[Tuple[int, int]] = []
    queue = deque()

    def node_for(key) -> int:
        nid = key_id.get(key)
        if nid is None:
            nid = len(key_id)
            key_id[key] = nid
            info[nid] = {"old": key[0], "nxt": key[1]}
            queue.append(key)
        return nid

    for key in canon(expand(frozenset({phi}), empty, empty)):
        raw_edges.append((_INIT, node_for(key)))
    while queue:
        key = queue.popleft()
        src = key_id[key]
        for succ_key in canon(expand(key[1], empty, empty)):
            raw_edges.append((src, node_for(succ_key)))
    raw_edges.sort()
    return info, raw_edges


def _until_subformulas(f) -> List[Until]:
    found = set()
    stack = [f]
    while stack:
        g = stack.pop()
        t = type(g)
        if t is Until:
            found.add(g)
        if t is Not:
            stack.append(g.child)
        elif t is Next:
            stack.append(g.child)
        elif t in (And, Or, Until, Release):
            stack.extend((g.left, g.right))
    return sorted(found, key=print_formula)


def _node_label(old) -> Tuple[FrozenSet, FrozenSet]:
    pos = frozenset(lit.term for lit in old if type(lit) is Leaf)
    neg = frozenset(lit.child.term for lit in old
                    if type(lit) is Not and type(lit.child) is Leaf)
    return pos, neg


def _tableau_automaton(phi) -> BuchiAutomaton:
    info, raw_edges = _expand_tableau(phi)
    node_ids = sorted(info)
    labels = {nid: _node_label(info[nid]["old"]) for nid in node_ids}

    fsets: List[FrozenSet] = []
    for g in _until_subformulas(phi):
        fsets.append(frozenset(
            nid for nid in node_ids
            if g not in info[nid]["old"] or g.right in info[nid]["old"]))

    if len(fsets) <= 1:
        states = (_INIT, *node_ids)
        accepting = fsets[0] if fsets else frozenset(states)
        edges = tuple(Edge(src, *labels[dst], dst) for src, dst in raw_edges)
        return BuchiAutomaton(states, frozenset({_INIT}), frozenset(accepting),
                              edges)
    return _degeneralize(node_ids, raw_edges, labels, fsets)


def _degeneralize(node_ids, raw_edges, labels, fsets) -> BuchiAutomaton:
    """Turn a generalised acceptance family into plain Buchi acceptance.

    States are (node, level) pairs; taking a step from a level-i state
    whose node lies in the i-th set advances to level i+1 (mod k).  A run
    therefore passes level 0 at a set-0 node exactly when it cycles
    through every acceptance set, so those states are the accepting ones.
    """
    k = len(fsets)
    succ: Dict[int, List[int]] = {}
    for src, dst in raw_edges:
        succ.setdefault(src, []).append(dst)

    start = (_INIT, 0)
    order = [start]
    seen = {start}
    edges: List[Edge] = []
    queue = deque([start])
    while queue:
        state = queue.popleft()
        nid, level = state
        bump = nid != _INIT and nid in fsets[level]
        next_level = (level + 1) % k if bump else level
        for dst in succ.get(nid, ()):
            target = (dst, next_level)
            if target not in seen:
                seen.add(target)
                order.append(target)
                queue.append(target)
            edges.append(Edge(state, *labels[dst], target))
    accepting = frozenset(s for s in order if s[1] == 0 and s[0] != _INIT
                          and s[0] in fsets[0])
    return BuchiAutomaton(tuple(order), frozenset({start}), accepting,
                          tuple(edges))


# -- propositional folding ----------------------------------------------------
#
# Tableau size is driven by disjunctive branching, and a large temporal-free
# subformula (an equivalence chain, say) branches exponentially even when the
# temporal skeleton around it is tiny.  Folding each maximal temporal-free
# conjunction/disjunction into an opaque placeholder atom keeps that branching
# out of the state space; afterwards every edge constraint that mentions a
# placeholder is expanded back into the real literals it stands for.  A
# placeholder's truth at an instant depends only on that instant's letter, so
# the detour preserves the recognised language exactly.

_FOLD_PREFIX = "\x00fold"
_UNFOLD_CAP = 8192


def _fold_propositional(phi, require_dnf: bool):
    """Replace maximal temporal-free And/Or subtrees of NNF *phi*.

    Returns ``(skeleton, table)`` where ``table`` maps each placeholder
    atom to the subformula it replaced.  With ``require_dnf`` a subtree
    only folds when its DNF stays under the cap in both polarities (the
    edge-unfolding consumer needs the term lists); otherwise the walk
    descends into it so smaller pieces can still fold.  Without the
    restriction every maximal candidate folds, which suits consumers that
    evaluate placeholders against concrete letters instead.
    """
    table: Dict[PlainAp, object] = {}
    cache: Dict[object, Optional[Leaf]] = {}

    def fold(sub) -> Optional[Leaf]:
        if sub in cache:
            return cache[sub]
        leaf = None
        if not require_dnf or (_dnf(sub) is not None
                               and _dnf(to_nnf(sub, True)) is not None):
            ap = PlainAp(f"{_FOLD_PREFIX}{len(table)}")
            table[ap] = sub
            leaf = Leaf(ap)
        cache[sub] = leaf
        return leaf

    def walk(f):
        t = type(f)
        if t in (And, Or):
            if is_temporal_free(f):
                leaf = fold(f)
                if leaf is not None:
                    return leaf
            left, right = walk(f.left), walk(f.right)
            if left is f.left and right is f.right:
                return f
            return t(left, right)
        if t is Next:
            child = walk(f.child)
            return f if child is f.child else Next(child)
        if t in (Until, Release):
            left, right = walk(f.left), walk(f.right)
            if left is f.left and right is f.right:
                return f
            return t(left, right)
        return f

    return walk(phi), table


def _join_terms(terms, extra):
    """Consistent pairwise unions of two (pos, neg) term lists, or None."""
    joined: Dict[Tuple[FrozenSet, FrozenSet], None] = {}
    for p1, n1 in terms:
        for p2, n2 in extra:
            pos, neg = p1 | p2, n1 | n2
            if pos & neg:
                continue
            joined[(pos, neg)] = None
            if len(joined) > _UNFOLD_CAP:
                return None
    return list(joined)


def _unfold_edges(aut: BuchiAutomaton, table) -> Optional[BuchiAutomaton]:
    """Expand placeholder literals on every edge back into real literals.

    Each placeholder contributes the DNF of its definition in the polarity
    it occurs with, so one skeleton edge becomes the consistent cross
    product of its placeholders' terms.  An inconsistent edge simply
    vanishes; None is returned when an expansion passes a cap and the
    caller should rebuild from the unfolded formula instead.
    """
    terms_for: Dict[PlainAp, Tuple[list, list]] = {}
    for ap, sub in table.items():
        pos, neg = _dnf(sub), _dnf(to_nnf(sub, True))
        if pos is None or neg is None:
            return None
        terms_for[ap] = (pos, neg)

    edges: Dict[Edge, None] = {}
    for edge in aut.edges:
        terms = [(frozenset(ap for ap in edge.pos if ap not in terms_for),
                  frozenset(ap for ap in edge.neg if ap not in terms_for))]
        for polarity, aps in enumerate((edge.pos, edge.neg)):
            for ap in aps:
                entry = terms_for.get(ap)
                if entry is None:
                    continue
                terms = _join_terms(terms, entry[polarity])
                if terms is None:
                    return None
        for pos, neg in terms:
            edges[Edge(edge.src, pos, neg, edge.dst)] = None
    return BuchiAutomaton(aut.states, aut.initial, aut.accepting,
                          tuple(edges))


def _holds_prop(f, label: FrozenSet) -> bool:
    """Truth of a temporal-free NNF formula on one full valuation."""
    t = type(f)
    if t is Leaf:
        return f.term in label
    if t is Not:
        return not _holds_prop(f.child, label)
    if t is And:
        return _holds_prop(f.left, label) and _holds_prop(f.right, label)
    if t is Or:
        return _holds_prop(f.left, label) or _holds_prop(f.right, label)
    if t is TrueConst:
        return True
    if t is FalseConst:
        return False
    raise AutomataError(f"cannot evaluate a {t.__name__} on a letter")


# -- translation entry point -------------------------------------------------


def _reject_tagged(formula) -> None:
    stack = [formula]
    while stack:
        f = stack.pop()
        t = type(f)
        if t is Leaf:
            if f.trace is not None or f.arg_traces is not None:
                raise AutomataError(
                    "trace-tagged atom in a single-trace formula; rename "
                    "atoms per trace before building an automaton")
        elif t is Not or t is Next or t is Eventually or t is Globally:
            stack.append(f.child)
        elif t in (And, Or, Implies, Iff, Until, WeakUntil, Release):
            stack.extend((f.left, f.right))


@lru_cache(maxsize=512)
def ltl_to_buchi(formula, fast_paths: bool = True) -> BuchiAutomaton:
    """Automaton whose language is exactly the formula's lasso models."""
    if isinstance(formula, HyperTslFormula):
        if formula.prefix:
            raise AutomataError(
                "quantified formula has no single-trace automaton; "
                "instantiate the prefix first")
        formula = formula.body
    _reject_tagged(formula)
    phi = simplify(to_nnf(simplify(formula)))

    if fast_paths:
        if is_temporal_free(phi):
            terms = _dnf(phi)
            if terms is not None:
                first, rest = "q0", "q1"
                edges = [Edge(first, pos, neg, rest) for pos, neg in terms]
                edges.append(Edge(rest, frozenset(), frozenset(), rest))
                return BuchiAutomaton((first, rest), frozenset({first}),
                                      frozenset({rest}), tuple(edges))
        body = _globally_body(phi)
        if body is not None and is_temporal_free(body):
            terms = _dnf(body)
            if terms is not None:
                state = "q0"
                edges = tuple(Edge(state, pos, neg, state)
                              for pos, neg in terms)
                return BuchiAutomaton((state,), frozenset({state}),
                                      frozenset({state}), edges)
        skeleton, table = _fold_propositional(phi, require_dnf=True)
        if table:
            unfolded = _unfold_edges(_tableau_automaton(skeleton), table)
            if unfolded is not None:
                return unfolded
    return _tableau_automaton(phi)


def trace_to_buchi(trace: LassoTrace, universe: Iterable = ()) -> BuchiAutomaton:
    """An automaton accepting exactly the given lasso word.

    Atoms in ``universe`` that a position does not contain are pinned
    false on the corresponding edge, so membership tests against a formula
    automaton see the same valuations that ``eval_ltl`` would.
    """
    alphabet = set(universe)
    for valuation in (*trace.stem, *trace.loop):
        alphabet |= valuation
    positions = [*trace.stem, *trace.loop]
    total, stem = len(positions), len(trace.stem)
    states = tuple(range(total))
    edges = []
    for i, valuation in enumerate(positions):
        dst = i + 1 if i + 1 < total else stem
        edges.append(Edge(i, frozenset(valuation),
                          frozenset(alphabet - valuation), dst))
    return BuchiAutomaton(states, frozenset({0}), frozenset(states),
                          tuple(edges))


# ---------------------------------------------------------------------------
# Products


def product(a: BuchiAutomaton, b: BuchiAutomaton) -> BuchiAutomaton:
    """Intersection of the two languages.

    When one operand accepts from every state the pair construction
    suffices; otherwise a two-phase flag tracks which acceptance set the
    run still owes a visit.
    """
    a_total = set(a.states) <= set(a.accepting)
    b_total = set(b.states) <= set(b.accepting)
    adj_a, adj_b = a.adjacency(), b.adjacency()

    if a_total or b_total:
        def initial_states():
            return [(s, t) for s in a.states if s in a.initial
                    for t in b.states if t in b.initial]

        def step(state):
            s, t = state
            for ea in adj_a[s]:
                for eb in adj_b[t]:
                    pos, neg = ea.pos | eb.pos, ea.neg | eb.neg
                    if pos & neg:
                        continue
                    yield Edge(state, pos, neg, (ea.dst, eb.dst))

        def accepts(state):
            return state[0] in a.accepting and state[1] in b.accepting
    else:
        def initial_states():
            return [(s, t, 0) for s in a.states if s in a.initial
                    for t in b.states if t in b.initial]

        def step(state):
            s, t, flag = state
            if flag == 0 and s in a.accepting:
                flag = 1
            elif flag == 1 and t in b.accepting:
                flag = 0
            for ea in adj_a[s]:
                for eb in adj_b[t]:
                    pos, neg = ea.pos | eb.pos, ea.neg | eb.neg
                    if pos & neg:
                        continue
                    yield Edge(state, pos, neg, (ea.dst, eb.dst, flag))

        def accepts(state):
            return state[2] == 1 and state[1] in b.accepting

    order: List = []
    seen = set()
    queue = deque()
    for s0 in initial_states():
        if s0 not in seen:
            seen.add(s0)
            order.append(s0)
            queue.append(s0)
    edges: List[Edge] = []
    while queue:
        state = queue.popleft()
        for edge in step(state):
            if edge.dst not in seen:
                seen.add(edge.dst)
                order.append(edge.dst)
                queue.append(edge.dst)
            edges.append(edge)
    return BuchiAutomaton(tuple(order), frozenset(initial_states()),
                          frozenset(s for s in order if accepts(s)),
                          tuple(edges))


# ---------------------------------------------------------------------------
# Emptiness


def _strongly_connected(vertices, adjacency) -> List[List]:
    """Iterative Tarjan over the given vertex order."""
    index: Dict[object, int] = {}
    low: Dict[object, int] = {}
    on_stack = set()
    stack: List = []
    components: List[List] = []
    counter = count()
    for root in vertices:
        if root in index:
            continue
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        frames = [(root, iter(adjacency.get(root, ())))]
        while frames:
            vertex, edges_it = frames[-1]
            descended = False
            for edge in edges_it:
                child = edge.dst
                if child not in index:
                    index[child] = low[child] = next(counter)
                    stack.append(child)
                    on_stack.add(child)
                    frames.append((child, iter(adjacency.get(child, ()))))
                    descended = True
                    break
                if child in on_stack:
                    low[vertex] = min(low[vertex], index[child])
            if descended:
                continue
            frames.pop()
            if frames:
                parent = frames[-1][0]
                low[parent] = min(low[parent], low[vertex])
            if low[vertex] == index[vertex]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == vertex:
                        break
                components.append(component)
    return components


def _edge_path(adjacency, sources: Sequence, target,
               allowed=None, min_len: int = 0) -> Optional[List[Edge]]:
    """Shortest edge path from any source to the target (BFS)."""
    if min_len == 0 and any(s == target for s in sources):
        return []
    source_set = set(sources)
    parents: Dict[object, Tuple[object, Edge]] = {}
    queue = deque(dict.fromkeys(sources))
    visited = set(queue)
    while queue:
        state = queue.popleft()
        for edge in adjacency.get(state, ()):
            if allowed is not None and edge.dst not in allowed:
                continue
            if edge.dst == target:
                path = [edge]
                back = state
                while back not in source_set:
                    prev, via = parents[back]
                    path.append(via)
                    back = prev
                path.reverse()
                return path
            if edge.dst not in visited:
                visited.add(edge.dst)
                parents[edge.dst] = (state, edge)
                queue.append(edge.dst)
    return None


def accepting_lasso(aut: BuchiAutomaton) -> Optional[Tuple[List[Edge], List[Edge]]]:
    """A reachable accepting stem/cycle edge pair, or None if empty."""
    adjacency = aut.adjacency()
    initial = [s for s in aut.states if s in aut.initial]

    reachable = set(initial)
    queue = deque(initial)
    while queue:
        state = queue.popleft()
        for edge in adjacency.get(state, ()):
            if edge.dst not in reachable:
                reachable.add(edge.dst)
                queue.append(edge.dst)

    components = _strongly_connected(
        [s for s in aut.states if s in reachable], adjacency)
    component_of: Dict[object, int] = {}
    for i, component in enumerate(components):
        for member in component:
            component_of[member] = i
    cyclic = set()
    for edge in aut.edges:
        if (edge.src in component_of and
                component_of.get(edge.dst) == component_of[edge.src]):
            cyclic.add(component_of[edge.src])

    for candidate in aut.states:
        if candidate not in aut.accepting or candidate not in reachable:
            continue
        comp_index = component_of.get(candidate)
        if comp_index not in cyclic:
            continue
        members = set(components[comp_index])
        stem = _edge_path(adjacency, initial, candidate)
        cycle = _edge_path(adjacency, [candidate], candidate,
                           allowed=members, min_len=1)
        if stem is None or cycle is None:
            continue
        return stem, cycle
    return None


def is_empty(aut: BuchiAutomaton) -> bool:
    return accepting_lasso(aut) is None


def witness_trace(stem: Sequence[Edge], cycle: Sequence[Edge]) -> LassoTrace:
    """A concrete lasso word taking the given edges.

    Each letter is the edge's required-atom set; atoms the edge merely
    permits stay false, which satisfies every negative constraint.
    """
    return LassoTrace(tuple(e.pos for e in stem), tuple(e.pos for e in cycle))


def ltl_sat(formula) -> Tuple[bool, Optional[LassoTrace]]:
    """Satisfiability with a lasso witness for the positive answer."""
    lasso = accepting_lasso(ltl_to_buchi(formula))
    if lasso is None:
        return False, None
    return True, witness_trace(*lasso)


# ---------------------------------------------------------------------------
# Labeled transition systems and model checking


@dataclass(frozen=True)
class TransitionSystem:
    """A finite labeled transition system over a fixed Ap universe.

    Unlike automaton edges, whose labels are constraints, each edge here
    carries a full valuation: the atoms in ``label`` hold, every other
    universe atom does not.  All infinite paths from ``initial`` are system
    behaviors - there is no acceptance condition.
    """

    states: Tuple
    initial: object
    universe: Tuple
    edges: Tuple  # (src, frozenset of true atoms, dst)

    def adjacency(self) -> Dict[object, List[Tuple]]:
        adj: Dict[object, List[Tuple]] = {s: [] for s in self.states}
        for src, label, dst in self.edges:
            adj[src].append((src, label, dst))
        return adj


def _reachable_or_dead_end(ts: TransitionSystem):
    adj = ts.adjacency()
    seen = {ts.initial}
    queue = deque([ts.initial])
    while queue:
        state = queue.popleft()
        if not adj.get(state):
            raise AutomataError(
                f"state {state!r} is reachable but has no outgoing "
                "transition; trace semantics needs infinite paths")
        for _, _, dst in adj[state]:
            if dst not in seen:
                seen.add(dst)
                queue.append(dst)
    return adj, seen


@lru_cache(maxsize=512)
def _negation_skeleton(formula) -> Tuple[BuchiAutomaton, tuple, dict]:
    """Folded automaton for the formula's negation, plus its fold table.

    Model checking matches automaton edges against full valuations, so the
    placeholder atoms never need unfolding there: each placeholder's
    definition is simply evaluated on the letter.  That keeps both the
    state count and the edge count at the skeleton's size no matter how
    wide the propositional parts of the formula are.

    The third element is the letter-lifting memo for this formula; riding
    in the cache entry lets repeated checks of the same property (one per
    repair candidate, say) lift each distinct letter only once.
    """
    _reject_tagged(formula)
    phi = simplify(to_nnf(simplify(Not(formula))))
    skeleton, table = _fold_propositional(phi, require_dnf=False)
    return _tableau_automaton(skeleton), tuple(table.items()), {}


def model_check(ts: TransitionSystem, formula
                ) -> Tuple[bool, Optional[LassoTrace]]:
    """Check that every infinite path of ``ts`` satisfies ``formula``.

    Returns ``(True, None)`` or ``(False, witness)`` where the witness is a
    lasso of full valuations along a violating path.  Works by intersecting
    the system with the automaton for the negated formula and searching for
    an accepting lasso.
    """
    if isinstance(formula, HyperTslFormula):
        if formula.prefix:
            raise AutomataError("quantified formula passed to model_check")
        formula = formula.body
    universe = set(ts.universe)
    unknown = {ap for ap in formula_aps(formula) if ap not in universe}
    if unknown:
        raise AutomataError(
            "formula atoms outside the system's universe: "
            + ", ".join(sorted(print_ap(ap) for ap in unknown)))

    adj, reachable = _reachable_or_dead_end(ts)
    aut, table, letter_cache = _negation_skeleton(formula)
    aut_adj = aut.adjacency()

    def lifted(label: FrozenSet) -> FrozenSet:
        """The label plus every placeholder whose definition it satisfies."""
        hit = letter_cache.get(label)
        if hit is None:
            hit = label | {ap for ap, sub in table
                           if _holds_prop(sub, label)}
            letter_cache[label] = hit
        return hit

    initial = [(ts.initial, b) for b in aut.initial]
    seen = set(initial)
    queue = deque(initial)
    states: List[Tuple] = list(initial)
    edges: List[Edge] = []
    while queue:
        s, b = queue.popleft()
        for _, label, s2 in adj[s]:
            letter = lifted(label) if table else label
            for bedge in aut_adj[b]:
                if bedge.pos <= letter and not (bedge.neg & letter):
                    nxt = (s2, bedge.dst)
                    edges.append(Edge((s, b), label, frozenset(), nxt))
                    if nxt not in seen:
                        seen.add(nxt)
                        states.append(nxt)
                        queue.append(nxt)

    accepting = frozenset(p for p in states if p[1] in aut.accepting)
    prod = BuchiAutomaton(tuple(states), frozenset(initial), accepting,
                          tuple(edges))
    lasso = accepting_lasso(prod)
    if lasso is None:
        return True, None
    return False, witness_trace(*lasso)


def format_automaton(aut: BuchiAutomaton) -> str:
    """Render an automaton as interchange text: a states/edges listing with
    boolean-expression labels and the acceptance set, for debugging."""
    index = {s: i for i, s in enumerate(aut.states)}

    def atom(ap):
        return ap if isinstance(ap, str) else print_ap(ap)

    def label(edge: Edge) -> str:
        parts = [atom(ap) for ap in sorted(edge.pos, key=str)]
        parts += [f"!{atom(ap)}" for ap in sorted(edge.neg, key=str)]
        return " & ".join(parts) if parts else "true"

    lines = [f"states: {len(aut.states)}",
             "initial: " + " ".join(
                 str(index[s]) for s in sorted(aut.initial, key=index.get)),
             "acceptance: " + " ".join(
                 str(index[s]) for s in sorted(aut.accepting, key=index.get))]
    for edge in aut.edges:
        lines.append(
            f"{index[edge.src]} --[{label(edge)}]--> {index[edge.dst]}")
    return "\n".join(lines) + "\n"
