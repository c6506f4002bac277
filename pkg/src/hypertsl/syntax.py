"""Syntax of temporal stream logic (TSL) and its hyper variants.

A TSL formula talks about *streams*: inputs the environment produces and
cells the system overwrites each step.  Function terms are built from stream
references and applications of uninterpreted function symbols; a predicate
term is a function term used at formula level (boolean valued); an update
term ``[c <- t]`` says "cell c is assigned term t this step" and is compared
syntactically, never semantically.

The hyper variants add a quantifier prefix over trace variables and tag each
leaf with the trace it reads from.  Two flavors exist:

* ``plain``  - a whole leaf is tagged: ``gt(votesA, votesB)@p1``
* ``rel``    - each argument of a predicate may come from its own trace:
  ``eq(votesA@p1, votesA@p2)``

LTL / HyperLTL reuse the same formula nodes with atomic propositions
(:class:`PredicateAp`, :class:`UpdateAp`, :class:`PlainAp`) as leaf payloads.

The concrete grammar (also accepted by :func:`parse_property`)::

    document  := header? (section+ | formula)
    header    := "flavor" ":" ("plain" | "rel")
    section   := ("assume" | "guarantee") ":" formula
    formula   := { ("forall" | "exists") NAME "." } iff
    iff       := impl [ "<->" iff ]
    impl      := or [ "->" impl ]
    or        := and { "||" and }
    and       := bin { "&&" bin }
    bin       := unary [ ("U" | "W" | "R") bin ]
    unary     := ("!" | "G" | "F" | "X") unary | atom
    atom      := "true" | "false" | "(" formula ")" | update | predatom
    update    := "[" NAME "<-" term "]" tag?
    predatom  := NAME ( "(" [ argterm { "," argterm } ] ")" )? tag?
    argterm   := term tag?
    term      := NAME ( "(" [ term { "," term } ] ")" )?
    tag       := "@" NAME

``//`` starts a line comment.  ``G F X U W R true false forall exists
assume guarantee flavor plain rel`` are reserved words.  Binary temporal
operators bind tighter than ``&&``; ``->``, ``<->`` and the binary temporal
operators associate to the right, ``&&`` and ``||`` to the left.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Union


class TslError(Exception):
    """Base class for every error this package raises on purpose."""


class ParseError(TslError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class ValidationError(TslError):
    pass


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class SymbolRef:
    """A stream reference: an input or cell read by name."""

    name: str


@dataclass(frozen=True)
class Apply:
    """Application of an uninterpreted function symbol to argument terms.

    Constants are 0-ary applications and always print with parentheses
    (``A()``), keeping them distinct from stream references.
    """

    symbol: str
    args: tuple = ()


FunctionTerm = Union[SymbolRef, Apply]


@dataclass(frozen=True)
class PredicateTerm:
    """A boolean-valued leaf term.

    ``application=True``: the symbol is an uninterpreted predicate applied to
    ``args``.  ``application=False``: a bare stream read used as a boolean
    (``voteA``); ``args`` is empty then.
    """

    symbol: str
    args: tuple = ()
    application: bool = True


@dataclass(frozen=True)
class UpdateTerm:
    """``[cell <- term]`` - cell assignment, compared syntactically."""

    cell: str
    term: FunctionTerm


# ---------------------------------------------------------------------------
# atomic propositions (LTL / HyperLTL / self-composition)


@dataclass(frozen=True)
class PredicateAp:
    term: PredicateTerm
    copy: Optional[int] = None


@dataclass(frozen=True)
class UpdateAp:
    term: UpdateTerm
    copy: Optional[int] = None


@dataclass(frozen=True)
class PlainAp:
    name: str
    copy: Optional[int] = None


Ap = Union[PredicateAp, UpdateAp, PlainAp]


_AP_INTERN: dict = {}


def with_copy(ap: Ap, copy: Optional[int]) -> Ap:
    """*ap* with its copy index replaced, as a shared (interned) object.

    Copy-indexed atoms are compared in bulk by the model-checking layers,
    so equal results are pooled: identical atoms then hit the pointer
    fast path of set and dict lookups instead of structural equality.
    """
    if isinstance(ap, PlainAp):
        made = PlainAp(ap.name, copy)
    elif isinstance(ap, PredicateAp):
        made = PredicateAp(ap.term, copy)
    else:
        made = UpdateAp(ap.term, copy)
    return _AP_INTERN.setdefault(made, made)


def strip_copy(ap: Ap) -> Ap:
    return with_copy(ap, None)


# ---------------------------------------------------------------------------
# formula nodes


@dataclass(frozen=True)
class TrueConst:
    pass


@dataclass(frozen=True)
class FalseConst:
    pass


@dataclass(frozen=True)
class Leaf:
    """A formula leaf.

    ``term`` is a :class:`PredicateTerm` or :class:`UpdateTerm` for (Hyper)TSL
    and an :class:`Ap` for (Hyper)LTL.  ``trace`` tags the whole leaf with a
    trace variable; ``arg_traces`` is the rel-flavor per-argument tagging of a
    predicate application (exactly one of the two is used in hyper formulas).
    """

    term: object
    trace: Optional[str] = None
    arg_traces: Optional[tuple] = None


@dataclass(frozen=True)
class Not:
    child: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True)
class Iff:
    left: object
    right: object


@dataclass(frozen=True)
class Next:
    child: object


@dataclass(frozen=True)
class Until:
    left: object
    right: object


@dataclass(frozen=True)
class WeakUntil:
    left: object
    right: object


@dataclass(frozen=True)
class Release:
    left: object
    right: object


@dataclass(frozen=True)
class Eventually:
    child: object


@dataclass(frozen=True)
class Globally:
    child: object


TRUE = TrueConst()
FALSE = FalseConst()

#: Formula over term leaves (quantifier free).
TslFormula = object
#: Formula over Ap leaves (quantifier free).
LtlFormula = object


@dataclass(frozen=True)
class HyperTslFormula:
    """A quantifier prefix over trace variables plus a body.

    ``prefix`` is a tuple of ``("forall" | "exists", name)`` pairs.  The same
    container carries HyperLTL formulas; the leaf payload type tells the two
    apart (terms vs atomic propositions).
    """

    prefix: tuple
    body: object
    flavor: str = "plain"

    @property
    def variables(self) -> tuple:
        return tuple(v for _, v in self.prefix)


HyperLtlFormula = HyperTslFormula

FORALL = "forall"
EXISTS = "exists"

_UNARY = (Not, Next, Eventually, Globally)
_BINARY = (And, Or, Implies, Iff, Until, WeakUntil, Release)


def children(f) -> tuple:
    if isinstance(f, _UNARY):
        return (f.child,)
    if isinstance(f, _BINARY):
        return (f.left, f.right)
    return ()


def rebuild(f, kids: tuple):
    if isinstance(f, _UNARY):
        return type(f)(kids[0])
    if isinstance(f, _BINARY):
        return type(f)(kids[0], kids[1])
    return f


def iter_leaves(f) -> Iterator[Leaf]:
    """Yield every :class:`Leaf` of a formula (prefix accepted too)."""
    if isinstance(f, HyperTslFormula):
        f = f.body
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            yield node
        else:
            stack.extend(children(node))


def map_leaves(f, fn):
    """Structurally rebuild ``f`` with every leaf replaced by ``fn(leaf)``."""
    if isinstance(f, HyperTslFormula):
        return HyperTslFormula(f.prefix, map_leaves(f.body, fn), f.flavor)
    if isinstance(f, Leaf):
        return fn(f)
    kids = children(f)
    if not kids:
        return f
    return rebuild(f, tuple(map_leaves(k, fn) for k in kids))


def formula_aps(f) -> frozenset:
    """The set of atomic propositions of an (Hyper)LTL formula."""
    out = set()
    for leaf in iter_leaves(f):
        if not isinstance(leaf.term, (PredicateAp, UpdateAp, PlainAp)):
            raise ValidationError("formula has term leaves, not atomic propositions")
        out.add(leaf.term)
    return frozenset(out)


# ---------------------------------------------------------------------------
# tokenizer

_PUNCT = [
    ("<->", "IFF"),
    ("->", "IMPL"),
    ("<-", "ASSIGN"),
    ("&&", "AND"),
    ("||", "OR"),
    ("!", "NOT"),
    ("(", "LPAR"),
    (")", "RPAR"),
    ("[", "LBRACK"),
    ("]", "RBRACK"),
    (",", "COMMA"),
    (".", "DOT"),
    (":", "COLON"),
    ("@", "AT"),
]

RESERVED = {
    "G", "F", "X", "U", "W", "R",
    "true", "false", "forall", "exists",
    "assume", "guarantee", "flavor", "plain", "rel",
}


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    column: int


def _is_name_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_name_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(text: str) -> list:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if _is_name_start(c):
            j = i
            while j < n and _is_name_char(text[j]):
                j += 1
            word = text[i:j]
            tokens.append(Token("NAME", word, line, col))
            col += j - i
            i = j
            continue
        for lit, kind in _PUNCT:
            if text.startswith(lit, i):
                tokens.append(Token(kind, lit, line, col))
                i += len(lit)
                col += len(lit)
                break
        else:
            raise ParseError(f"lexical error: unexpected character {c!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# symbol table (arity / kind consistency)


class SymbolTable:
    """Tracks how each identifier is used; first use wins, conflicts raise.

    One namespace: a symbol is either a *stream* (input or cell, referenced
    bare) or an *applied* symbol with a fixed arity.  Applied symbols used at
    formula level are additionally marked as predicates (they may also occur
    inside terms - predicates are function symbols with boolean results).
    """

    def __init__(self):
        self.streams = set()
        self.arity = {}
        self.predicates = set()
        self.cells = set()

    def use_stream(self, name: str, line: int = 0, column: int = 0):
        if name in self.arity:
            raise ParseError(
                f"'{name}' is applied to arguments elsewhere and cannot also "
                "name a stream", line, column)
        self.streams.add(name)

    def use_applied(self, name: str, arity: int, line: int = 0, column: int = 0,
                    predicate: bool = False):
        if name in self.streams:
            raise ParseError(
                f"'{name}' names a stream and cannot be applied to arguments",
                line, column)
        seen = self.arity.get(name)
        if seen is None:
            self.arity[name] = arity
        elif seen != arity:
            raise ParseError(
                f"arity mismatch for '{name}': first seen with {seen} "
                f"argument(s), now {arity}", line, column)
        if predicate:
            self.predicates.add(name)

    def use_cell(self, name: str, line: int = 0, column: int = 0):
        self.use_stream(name, line, column)
        self.cells.add(name)


# ---------------------------------------------------------------------------
# parser


@dataclass(frozen=True)
class SpecFile:
    """A parsed ``.htsl`` document: optional assumption plus the guarantee."""

    flavor: str
    assume: Optional[HyperTslFormula]
    guarantee: HyperTslFormula

    @property
    def formula(self) -> HyperTslFormula:
        return combine_assume_guarantee(self.assume, self.guarantee)


class _Parser:
    def __init__(self, tokens, flavor: str, symbols: SymbolTable,
                 known_inputs=None):
        self.tokens = tokens
        self.pos = 0
        self.flavor = flavor
        self.symbols = symbols
        self.known_inputs = frozenset(known_inputs or ())

    # -- token helpers

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at_name(self, *values) -> bool:
        tok = self.peek()
        return tok.kind == "NAME" and (not values or tok.value in values)

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            want = dict((k, v) for v, k in _PUNCT).get(kind, kind)
            raise ParseError(f"expected {want!r}, found {tok.value or 'end of input'!r}",
                             tok.line, tok.column)
        return self.next()

    def error(self, message: str):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.column)

    def ident(self, what: str) -> Token:
        tok = self.peek()
        if tok.kind != "NAME" or tok.value in RESERVED:
            self.error(f"expected {what}, found {tok.value or 'end of input'!r}")
        return self.next()

    # -- formulas

    def quantified(self) -> HyperTslFormula:
        prefix = []
        bound = set()
        while self.at_name(FORALL, EXISTS):
            kind = self.next().value
            tok = self.ident("trace variable")
            if tok.value in bound:
                raise ParseError(f"trace variable '{tok.value}' bound twice",
                                 tok.line, tok.column)
            bound.add(tok.value)
            prefix.append((kind, tok.value))
            self.expect("DOT")
        body = self.iff()
        formula = HyperTslFormula(tuple(prefix), body, self.flavor)
        self._check_tags(formula)
        return formula

    def iff(self):
        left = self.impl()
        if self.peek().kind == "IFF":
            self.next()
            return Iff(left, self.iff())
        return left

    def impl(self):
        left = self.or_()
        if self.peek().kind == "IMPL":
            self.next()
            return Implies(left, self.impl())
        return left

    def or_(self):
        node = self.and_()
        while self.peek().kind == "OR":
            self.next()
            node = Or(node, self.and_())
        return node

    def and_(self):
        node = self.binary_temporal()
        while self.peek().kind == "AND":
            self.next()
            node = And(node, self.binary_temporal())
        return node

    def binary_temporal(self):
        left = self.unary()
        if self.at_name("U", "W", "R"):
            op = self.next().value
            right = self.binary_temporal()
            return {"U": Until, "W": WeakUntil, "R": Release}[op](left, right)
        return left

    def unary(self):
        tok = self.peek()
        if tok.kind == "NOT":
            self.next()
            return Not(self.unary())
        if self.at_name("G", "F", "X"):
            op = self.next().value
            child = self.unary()
            return {"G": Globally, "F": Eventually, "X": Next}[op](child)
        return self.atom()

    def atom(self):
        tok = self.peek()
        if self.at_name("true"):
            self.next()
            return TRUE
        if self.at_name("false"):
            self.next()
            return FALSE
        if tok.kind == "LPAR":
            self.next()
            node = self.iff()
            self.expect("RPAR")
            return node
        if tok.kind == "LBRACK":
            return self.update()
        if tok.kind == "NAME" and tok.value not in RESERVED:
            return self.predatom()
        self.error(f"expected a formula, found {tok.value or 'end of input'!r}")

    def update(self):
        self.expect("LBRACK")
        target = self.ident("cell name")
        if target.value in self.known_inputs:
            raise ParseError(
                f"'{target.value}' is an input and cannot be updated",
                target.line, target.column)
        self.symbols.use_cell(target.value, target.line, target.column)
        self.expect("ASSIGN")
        term = self.term()
        self.expect("RBRACK")
        trace = self.tag()
        return Leaf(UpdateTerm(target.value, term), trace=trace)

    def predatom(self):
        name = self.ident("predicate or stream name")
        if self.peek().kind != "LPAR":
            self.symbols.use_stream(name.value, name.line, name.column)
            return Leaf(PredicateTerm(name.value, (), application=False),
                        trace=self.tag())
        self.next()
        args, tags = [], []
        if self.peek().kind != "RPAR":
            while True:
                args.append(self.term())
                tags.append(self.tag())
                if self.peek().kind != "COMMA":
                    break
                self.next()
        close = self.expect("RPAR")
        whole = self.tag()
        self.symbols.use_applied(name.value, len(args), name.line, name.column,
                                 predicate=True)
        term = PredicateTerm(name.value, tuple(args), application=True)
        tagged = [t for t in tags if t is not None]
        if not tagged:
            return Leaf(term, trace=whole)
        if whole is not None:
            raise ParseError(
                "cannot combine a whole-leaf tag with per-argument tags",
                close.line, close.column)
        if len(tagged) != len(args):
            raise ParseError(
                "either every argument carries a trace tag or none does",
                close.line, close.column)
        if self.flavor == "plain":
            if len(set(tagged)) > 1:
                raise ParseError(
                    "per-argument tags must all agree in the plain flavor",
                    close.line, close.column)
            return Leaf(term, trace=tagged[0])
        return Leaf(term, arg_traces=tuple(tags))

    def tag(self) -> Optional[str]:
        if self.peek().kind == "AT":
            self.next()
            return self.ident("trace variable").value
        return None

    def term(self) -> FunctionTerm:
        name = self.ident("term")
        if self.peek().kind != "LPAR":
            self.symbols.use_stream(name.value, name.line, name.column)
            return SymbolRef(name.value)
        self.next()
        args = []
        if self.peek().kind != "RPAR":
            while True:
                args.append(self.term())
                if self.peek().kind != "COMMA":
                    break
                self.next()
        self.expect("RPAR")
        self.symbols.use_applied(name.value, len(args), name.line, name.column)
        return Apply(name.value, tuple(args))

    # -- validation

    def _check_tags(self, formula: HyperTslFormula):
        bound = set(formula.variables)
        for leaf in iter_leaves(formula.body):
            tags = set()
            if leaf.trace is not None:
                tags.add(leaf.trace)
            if leaf.arg_traces is not None:
                tags.update(t for t in leaf.arg_traces if t is not None)
            for t in tags:
                if t not in bound:
                    raise ValidationError(f"unbound trace variable '{t}'")
            if bound and not tags:
                raise ValidationError(
                    "untagged leaf inside a quantified formula: "
                    + print_formula(leaf))


def _parse_document(text: str, known_inputs=None, symbols: Optional[SymbolTable] = None):
    tokens = tokenize(text)
    symbols = symbols if symbols is not None else SymbolTable()
    flavor = "plain"
    pos = 0
    if (tokens[pos].kind == "NAME" and tokens[pos].value == "flavor"
            and tokens[pos + 1].kind == "COLON"):
        tok = tokens[pos + 2]
        if tok.kind != "NAME" or tok.value not in ("plain", "rel"):
            raise ParseError("flavor must be 'plain' or 'rel'", tok.line, tok.column)
        flavor = tok.value
        pos += 3
    parser = _Parser(tokens[pos:], flavor, symbols, known_inputs)
    sections = {}
    if parser.at_name("assume", "guarantee"):
        while parser.at_name("assume", "guarantee"):
            tok = parser.next()
            parser.expect("COLON")
            if tok.value in sections:
                raise ParseError(f"duplicate section '{tok.value}'",
                                 tok.line, tok.column)
            sections[tok.value] = parser.quantified()
        if "guarantee" not in sections:
            parser.error("document has an assume section but no guarantee")
    else:
        sections["guarantee"] = parser.quantified()
    parser.expect("EOF")
    if parser.known_inputs:
        for name in symbols.cells & parser.known_inputs:
            raise ValidationError(f"'{name}' is an input and cannot be updated")
    return SpecFile(flavor, sections.get("assume"), sections["guarantee"]), symbols


def parse_spec_file(text: str, known_inputs=None) -> SpecFile:
    """Parse a full ``.htsl`` document into its sections."""
    spec, _ = _parse_document(text, known_inputs)
    return spec


def parse_property(text: str, known_inputs=None) -> HyperTslFormula:
    """Parse a property (bare formula or ``.htsl`` document).

    If the document carries an ``assume:`` section it is folded into the
    guarantee via :func:`combine_assume_guarantee`.
    """
    return parse_spec_file(text, known_inputs).formula


def parse_term_text(text: str) -> FunctionTerm:
    """Parse a bare function term (used by machine files)."""
    parser = _Parser(tokenize(text), "plain", SymbolTable())
    term = parser.term()
    parser.expect("EOF")
    return term


def parse_ap_text(text: str) -> Ap:
    """Parse an atomic proposition string.

    Accepts predicate atoms (``voteA``, ``gt(votesA, votesB)``), updates
    (``[winner <- A()]``) and an optional numeric ``@k`` copy-index suffix
    as produced by self-composition.
    """
    copy = None
    if "@" in text:
        head, _, idx = text.rpartition("@")
        if idx.isdigit():
            text, copy = head, int(idx)
    parser = _Parser(tokenize(text), "plain", SymbolTable())
    leaf = parser.atom()
    parser.expect("EOF")
    if not isinstance(leaf, Leaf):
        raise ValidationError(f"not an atomic proposition: {text!r}")
    if isinstance(leaf.term, UpdateTerm):
        return UpdateAp(leaf.term, copy)
    return PredicateAp(leaf.term, copy)


# ---------------------------------------------------------------------------
# printer

_PREC = {
    Iff: 1, Implies: 2, Or: 3, And: 4,
    Until: 5, WeakUntil: 5, Release: 5,
    Not: 6, Next: 6, Eventually: 6, Globally: 6,
}
_OP = {Iff: "<->", Implies: "->", Or: "||", And: "&&",
       Until: "U", WeakUntil: "W", Release: "R",
       Next: "X", Eventually: "F", Globally: "G"}
_RIGHT_ASSOC = (Iff, Implies, Until, WeakUntil, Release)


def print_term(term: FunctionTerm) -> str:
    if isinstance(term, SymbolRef):
        return term.name
    return f"{term.symbol}({', '.join(print_term(a) for a in term.args)})"


def _print_leaf(leaf: Leaf) -> str:
    term = leaf.term
    if isinstance(term, (PredicateAp, UpdateAp, PlainAp)):
        text = print_ap(term)
    elif isinstance(term, UpdateTerm):
        text = f"[{term.cell} <- {print_term(term.term)}]"
    elif isinstance(term, PredicateTerm):
        if not term.application:
            text = term.symbol
        elif leaf.arg_traces is not None:
            parts = [print_term(a) + (f"@{t}" if t else "")
                     for a, t in zip(term.args, leaf.arg_traces)]
            text = f"{term.symbol}({', '.join(parts)})"
        else:
            text = f"{term.symbol}({', '.join(print_term(a) for a in term.args)})"
    else:
        raise ValidationError(f"cannot print leaf payload {term!r}")
    if leaf.trace is not None:
        text += f"@{leaf.trace}"
    return text


def print_ap(ap: Ap) -> str:
    if isinstance(ap, PlainAp):
        text = ap.name
    elif isinstance(ap, PredicateAp):
        text = _print_leaf(Leaf(ap.term))
    elif isinstance(ap, UpdateAp):
        text = f"[{ap.term.cell} <- {print_term(ap.term.term)}]"
    else:
        raise ValidationError(f"not an atomic proposition: {ap!r}")
    if ap.copy is not None:
        text += f"@{ap.copy}"
    return text


def _print(f, min_level: int) -> str:
    if isinstance(f, TrueConst):
        return "true"
    if isinstance(f, FalseConst):
        return "false"
    if isinstance(f, Leaf):
        return _print_leaf(f)
    level = _PREC[type(f)]
    if isinstance(f, _UNARY):
        op = "!" if isinstance(f, Not) else _OP[type(f)] + " "
        text = op + _print(f.child, level)
    else:
        op = _OP[type(f)]
        if isinstance(f, _RIGHT_ASSOC):
            text = f"{_print(f.left, level + 1)} {op} {_print(f.right, level)}"
        else:
            text = f"{_print(f.left, level)} {op} {_print(f.right, level + 1)}"
    if level < min_level:
        return f"({text})"
    return text


def print_formula(f) -> str:
    """Print a quantifier-free formula."""
    return _print(f, 0)


def print_property(f) -> str:
    """Print a property so that ``parse_property`` reproduces it exactly.

    Rel-flavor formulas are prefixed with the ``flavor: rel`` header the
    parser needs to accept per-argument tags.
    """
    if not isinstance(f, HyperTslFormula):
        return print_formula(f)
    head = "".join(f"{kind} {var}. " for kind, var in f.prefix)
    text = head + print_formula(f.body)
    if f.flavor == "rel":
        return f"flavor: rel\n{text}"
    return text


# ---------------------------------------------------------------------------
# desugaring

_CORE = (TrueConst, Leaf, Not, And, Next, Until)


def desugar(f):
    """Rewrite into the core operator set {true, leaf, !, &&, X, U}.

    Total and idempotent; accepts prefixed formulas (the body is rewritten).
    """
    if isinstance(f, HyperTslFormula):
        return HyperTslFormula(f.prefix, desugar(f.body), f.flavor)
    if isinstance(f, (TrueConst, Leaf)):
        return f
    if isinstance(f, FalseConst):
        return Not(TRUE)
    if isinstance(f, Not):
        return Not(desugar(f.child))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Or):
        return Not(And(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        return Not(And(desugar(f.left), Not(desugar(f.right))))
    if isinstance(f, Iff):
        a, b = desugar(f.left), desugar(f.right)
        return And(Not(And(a, Not(b))), Not(And(b, Not(a))))
    if isinstance(f, Next):
        return Next(desugar(f.child))
    if isinstance(f, Until):
        return Until(desugar(f.left), desugar(f.right))
    if isinstance(f, Eventually):
        return Until(TRUE, desugar(f.child))
    if isinstance(f, Globally):
        return Not(Until(TRUE, Not(desugar(f.child))))
    if isinstance(f, WeakUntil):
        until = Until(desugar(f.left), desugar(f.right))
        forever = Not(Until(TRUE, Not(desugar(f.left))))
        return Not(And(Not(until), Not(forever)))
    if isinstance(f, Release):
        return Not(Until(Not(desugar(f.left)), Not(desugar(f.right))))
    raise ValidationError(f"cannot desugar {f!r}")


# ---------------------------------------------------------------------------
# term collection


@dataclass(frozen=True)
class CollectedTerms:
    predicates: frozenset
    updates: frozenset
    cells: frozenset
    inputs: frozenset

    def __iter__(self):
        return iter((self.predicates, self.updates, self.cells, self.inputs))


def _referenced_streams(term: FunctionTerm, out: set):
    if isinstance(term, SymbolRef):
        out.add(term.name)
    else:
        for a in term.args:
            _referenced_streams(a, out)


def collect_terms(f) -> CollectedTerms:
    """Collect predicate terms, update terms, cells and inputs of a formula.

    Trace tags are stripped (they live on leaves, not terms).  Cells are
    exactly the update targets seen in ``f``; every other referenced stream
    is reported as an input - the formula alone cannot know about cells it
    never updates.  Ap leaves are unwrapped, so the function also works on
    translated formulas.
    """
    preds, updates, streams = set(), set(), set()
    for leaf in iter_leaves(f):
        term = leaf.term
        if isinstance(term, (PredicateAp, UpdateAp)):
            term = term.term
        elif isinstance(term, PlainAp):
            continue
        if isinstance(term, PredicateTerm):
            preds.add(term)
            if not term.application:
                streams.add(term.symbol)
            for a in term.args:
                _referenced_streams(a, streams)
        elif isinstance(term, UpdateTerm):
            updates.add(term)
            _referenced_streams(term.term, streams)
        else:
            raise ValidationError(f"unexpected leaf payload {term!r}")
    cells = frozenset(u.cell for u in updates)
    return CollectedTerms(frozenset(preds), frozenset(updates), cells,
                          frozenset(streams - cells))


# ---------------------------------------------------------------------------
# trace-tag surgery


def retag_formula(f, mapping: Mapping[str, str]):
    """Rename the trace tags of every leaf according to ``mapping``."""

    def rename(leaf: Leaf) -> Leaf:
        trace = mapping.get(leaf.trace, leaf.trace) if leaf.trace else None
        arg_traces = None
        if leaf.arg_traces is not None:
            arg_traces = tuple(mapping.get(t, t) if t else None
                               for t in leaf.arg_traces)
        return Leaf(leaf.term, trace=trace, arg_traces=arg_traces)

    return map_leaves(f, rename)


def tag_formula(f, variable: str):
    """Tag every (untagged) leaf of a quantifier-free formula with a trace."""

    def tag(leaf: Leaf) -> Leaf:
        if leaf.trace is not None or leaf.arg_traces is not None:
            raise ValidationError("formula is already tagged")
        return Leaf(leaf.term, trace=variable)

    return map_leaves(f, tag)


def combine_assume_guarantee(assume: Optional[HyperTslFormula],
                             guarantee: HyperTslFormula) -> HyperTslFormula:
    """Fold an assumption into a guarantee: assume -> guarantee in one body.

    A quantified assumption has its prefix variables renamed positionally to
    the guarantee's (kinds must match and the prefix must not be longer); a
    quantifier-free assumption (a plain trace property) is tagged once per
    guarantee variable and conjoined.  This is the combination the repair
    engine checks.
    """
    if assume is None:
        return guarantee
    if not isinstance(guarantee, HyperTslFormula):
        raise ValidationError("guarantee must be a property")
    if assume.flavor != guarantee.flavor and assume.prefix:
        raise ValidationError("assume/guarantee flavors differ")
    if not assume.prefix:
        if not guarantee.prefix:
            body = Implies(assume.body, guarantee.body)
            return HyperTslFormula((), body, guarantee.flavor)
        conj = None
        for var in guarantee.variables:
            tagged = tag_formula(assume.body, var)
            conj = tagged if conj is None else And(conj, tagged)
        return HyperTslFormula(guarantee.prefix,
                               Implies(conj, guarantee.body), guarantee.flavor)
    if len(assume.prefix) > len(guarantee.prefix):
        raise ValidationError("assumption quantifies over more traces than "
                              "the guarantee")
    mapping = {}
    for (akind, avar), (gkind, gvar) in zip(assume.prefix, guarantee.prefix):
        if akind != gkind:
            raise ValidationError(
                f"assumption prefix kind mismatch at '{avar}': "
                f"{akind} vs {gkind}")
        mapping[avar] = gvar
    body = Implies(retag_formula(assume.body, mapping), guarantee.body)
    return HyperTslFormula(guarantee.prefix, body, guarantee.flavor)


# ---------------------------------------------------------------------------
# Hash caching
#
# Formula rewriting (normal forms, tableau expansion) keeps large shared
# subtrees in sets and dict keys.  The generated dataclass __hash__ walks
# the whole subtree on every call, which turns those set operations
# quadratic; caching the value on first use makes them cheap.  Equality is
# untouched - it already short-circuits on identical shared children.

def _install_cached_hash(cls) -> None:
    names = tuple(f.name for f in dataclasses.fields(cls))

    def __hash__(self, _names=names):
        value = self.__dict__.get("_hash")
        if value is None:
            value = hash(tuple(getattr(self, name) for name in _names))
            object.__setattr__(self, "_hash", value)
        return value

    cls.__hash__ = __hash__


for _cls in (SymbolRef, Apply, PredicateTerm, UpdateTerm,
             PredicateAp, UpdateAp, PlainAp,
             TrueConst, FalseConst, Leaf, Not, And, Or, Implies, Iff,
             Next, Until, WeakUntil, Release, Eventually, Globally,
             HyperTslFormula):
    _install_cached_hash(_cls)
del _cls
