"""Temporal stream logic and its hyper variants.

Parsing, exact lasso-execution semantics, the update-aware LTL
approximation, pseudo-hyperproperty detection, existential unrealizability
checking, a built-in LTL-to-Buchi model checker and winning-region repair of
Mealy control strategies.
"""

from .approx import (
    ApproxError, cell_props, syntactic_conversion, translate_execution,
    translate_execution_prefix, translate_formula, update_universe,
)
from .automata import (
    AutomataError, BuchiAutomaton, Edge, TransitionSystem,
    accepting_lasso, format_automaton, is_empty, ltl_sat, ltl_to_buchi,
    model_check, product, simplify, to_nnf, trace_to_buchi, witness_trace,
)
from .machine import (
    MachineError, MealyMachine, FreeChoice, Refinement, RepairReport,
    REPAIRED, ALREADY_HOLDS, NO_REPAIR,
    load_machine, machine_to_json, free_choices, enumerate_refinements,
    is_refinement, self_compose, check_models, repair,
)
from .pseudo import (
    PseudoError, PseudoVerdict, StrategyDecision,
    build_pseudo_check, check_exists_unrealizable, collapse,
    decide_exists_forall_sat, exists_encoding,
    is_pseudo_hyperltl, is_pseudo_hypertsl,
    pseudo_realizability_local_determinism,
)
from .semantics import (
    Configuration, EvalError, Interpretation,
    LassoExecution, LassoStep, LassoTrace,
    collect_symbols, configuration_lasso,
    eval_hyperltl, eval_hypertsl, eval_ltl, eval_term, eval_tsl,
    execution_from_json, interpretation_from_json, load_json_file,
    random_interpretation, trace_from_json,
)
from .syntax import (
    TslError, ParseError, ValidationError,
    SymbolRef, Apply, PredicateTerm, UpdateTerm,
    PredicateAp, UpdateAp, PlainAp,
    TrueConst, FalseConst, TRUE, FALSE,
    Leaf, Not, And, Or, Implies, Iff,
    Next, Until, WeakUntil, Release, Eventually, Globally,
    HyperTslFormula, HyperLtlFormula, FORALL, EXISTS,
    SpecFile, parse_property, parse_spec_file, parse_term_text, parse_ap_text,
    print_term, print_ap, print_formula, print_property,
    desugar, collect_terms, CollectedTerms,
    retag_formula, tag_formula, combine_assume_guarantee,
    iter_leaves, map_leaves, formula_aps, with_copy, strip_copy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
