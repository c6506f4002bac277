"""Command-line front end.

Thin wrappers over the library operations, plus a harness that re-runs the
bundled case-study matrix (the voting variants and the blind auction)
against the recorded expectations.  Every subcommand prints human-readable
text by default and a machine-readable JSON document under ``--format
json``; exit codes are part of the contract (see the README) so scripts can
branch on them without parsing output.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from .approx import syntactic_conversion, translate_formula
from .automata import ltl_sat
from .machine import (
    NO_REPAIR, free_choices, load_machine, machine_to_json, repair,
)
from .pseudo import is_pseudo_hyperltl, is_pseudo_hypertsl
from .semantics import (
    eval_hyperltl, eval_hypertsl, eval_ltl, eval_tsl,
    execution_from_json, interpretation_from_json, load_json_file,
    trace_from_json,
)
from .syntax import TslError, parse_property, print_ap, print_property

FIXTURES = Path(__file__).parent / "fixtures"

OK = 0
FALSIFIED = 1  # unsat / evaluates false / no repair / reproduction mismatch
ERROR = 2


# ---------------------------------------------------------------------------
# small helpers


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _trace_doc(trace) -> dict:
    """JSON form of a lasso trace (the inverse of the --trace file shape)."""
    def position(aps):
        return sorted(print_ap(ap) for ap in aps)
    return {"stem": [position(p) for p in trace.stem],
            "loop": [position(p) for p in trace.loop]}


def _trace_lines(trace, indent: str = "  "):
    def show(aps):
        return "{" + ", ".join(sorted(print_ap(ap) for ap in aps)) + "}"
    yield indent + "stem: " + " ".join(show(p) for p in trace.stem)
    yield indent + "loop: " + " ".join(show(p) for p in trace.loop)


def _emit(args, doc: dict, text_lines) -> None:
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        for line in text_lines:
            print(line)


# ---------------------------------------------------------------------------
# check


def _check_one(path: str, flavor: str) -> dict:
    if path.endswith(".json"):
        machine = load_machine(_read(path))
        return {"file": path, "ok": True, "kind": "machine",
                "states": len(machine.states),
                "choices": len(free_choices(machine))}
    formula = parse_property(_read(path))
    if flavor != "any" and formula.flavor != flavor:
        raise TslError(f"declares flavor '{formula.flavor}', "
                       f"but '{flavor}' was required")
    return {"file": path, "ok": True, "kind": "property",
            "flavor": formula.flavor,
            "variables": list(formula.variables)}


def cmd_check(args) -> int:
    results, failed = [], False
    for path in args.files:
        try:
            results.append(_check_one(path, args.flavor))
        except (TslError, OSError, json.JSONDecodeError) as exc:
            results.append({"file": path, "ok": False, "error": str(exc)})
            failed = True

    def line(r):
        if not r["ok"]:
            return f"ERROR {r['file']}: {r['error']}"
        if r["kind"] == "machine":
            return (f"OK {r['file']} (machine, {r['states']} states, "
                    f"{r['choices']} free choices)")
        names = ", ".join(r["variables"]) or "quantifier-free"
        return f"OK {r['file']} (property, {r['flavor']}, {names})"

    _emit(args, {"files": results}, (line(r) for r in results))
    return ERROR if failed else OK


# ---------------------------------------------------------------------------
# approx


def cmd_approx(args) -> int:
    formula = parse_property(_read(args.file))
    translated = translate_formula(formula)
    doc = {"input": print_property(formula),
           "result": print_property(translated)}
    _emit(args, doc, [doc["result"]])
    return OK


# ---------------------------------------------------------------------------
# pseudo


def cmd_pseudo(args) -> int:
    formula = parse_property(_read(args.file))
    context = parse_property(_read(args.context)) if args.context else None
    if args.level == "ltl":
        verdict = is_pseudo_hyperltl(translate_formula(formula))
    else:
        verdict = is_pseudo_hypertsl(formula, context=context)

    doc = {"level": args.level, "verdict": verdict.kind}
    lines = [f"verdict: {verdict.kind}"]
    if verdict.collapsed is not None:
        doc["collapsed"] = print_property(verdict.collapsed)
        lines.append("collapsed: " + doc["collapsed"])
    if verdict.witnesses is not None:
        doc["witnesses"] = [_trace_doc(t) for t in verdict.witnesses]
        for i, trace in enumerate(verdict.witnesses, 1):
            lines.append(f"witness trace {i}:")
            lines.extend(_trace_lines(trace))
    _emit(args, doc, lines)
    return OK


# ---------------------------------------------------------------------------
# sat


def cmd_sat(args) -> int:
    formula = parse_property(_read(args.file) if args.file else args.formula)
    if formula.prefix:
        raise TslError("satisfiability expects a quantifier-free formula")
    satisfiable, witness = ltl_sat(syntactic_conversion(formula).body)
    doc = {"satisfiable": satisfiable}
    lines = ["satisfiable" if satisfiable else "unsatisfiable"]
    if witness is not None:
        doc["witness"] = _trace_doc(witness)
        lines.extend(_trace_lines(witness))
    _emit(args, doc, lines)
    return OK if satisfiable else FALSIFIED


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    formula = parse_property(_read(args.file))
    if bool(args.execution) == bool(args.trace):
        raise TslError("pass either --trace files or --execution files")
    if args.execution:
        if not args.interpretation:
            raise TslError("--execution requires --interpretation")
        interp = interpretation_from_json(load_json_file(args.interpretation))
        executions = [execution_from_json(load_json_file(p))
                      for p in args.execution]
        if formula.prefix:
            value = eval_hypertsl(formula, executions, interp)
        elif len(executions) != 1:
            raise TslError("a quantifier-free formula takes one execution")
        else:
            value = eval_tsl(formula, executions[0], interp)
        count = {"executions": len(executions)}
    else:
        traces = [trace_from_json(load_json_file(p)) for p in args.trace]
        converted = syntactic_conversion(formula)
        if formula.prefix:
            value = eval_hyperltl(converted, traces)
        elif len(traces) != 1:
            raise TslError("a quantifier-free formula takes one trace")
        else:
            value = eval_ltl(converted, traces[0])
        count = {"traces": len(traces)}
    _emit(args, dict({"value": value}, **count),
          ["true" if value else "false"])
    return OK if value else FALSIFIED


# ---------------------------------------------------------------------------
# repair


def _repair_doc(report, seconds: float) -> dict:
    stats = {"mc_calls": report.mc_calls,
             "candidates_total": report.candidates_total,
             "candidates_tried": report.candidates_tried,
             "free_choices": len(report.choices),
             "seconds": round(seconds, 3)}
    if report.verdicts is not None:
        passing = [i for i, ok in enumerate(report.verdicts, 1) if ok]
        stats["passing"] = passing
        if passing:
            stats["first_index"] = passing[0]
    elif report.refinement is not None and report.candidates_tried:
        stats["first_index"] = report.candidates_tried
    doc = {"outcome": report.outcome, "stats": stats}
    if report.refinement is not None:
        doc["machine"] = machine_to_json(report.refinement.machine)
    if report.counterexample is not None:
        doc["counterexample"] = [_trace_doc(t) for t in report.counterexample]
    return doc


def cmd_repair(args) -> int:
    machine = load_machine(_read(args.machine))
    formula = parse_property(_read(args.property))
    start = time.perf_counter()
    report = repair(machine, formula, mode="all" if args.all else "first",
                    jobs=args.jobs)
    doc = _repair_doc(report, time.perf_counter() - start)

    stats = doc["stats"]
    lines = [f"outcome: {report.outcome}"]
    lines += [f"  {key}: {stats[key]}" for key in sorted(stats)]
    if "machine" in doc:
        lines += ["repaired machine:", json.dumps(doc["machine"], indent=2)]
    if "counterexample" in doc:
        for i, trace in enumerate(report.counterexample, 1):
            lines.append(f"violating trace {i}:")
            lines.extend(_trace_lines(trace))
    _emit(args, doc, lines)

    if args.output and "machine" in doc:
        with open(args.output, "w", encoding="utf-8") as handle:
            json.dump(doc["machine"], handle, indent=2)
            handle.write("\n")
    return FALSIFIED if report.outcome == NO_REPAIR else OK


# ---------------------------------------------------------------------------
# reproduce


def _run_cell(table, cell, jobs: int) -> dict:
    machine = load_machine(_read(str(FIXTURES / cell["machine"])))
    formula = parse_property(_read(str(FIXTURES / cell["file"])))
    expected_total = table["machines"][cell["variant"]]["candidates_total"]
    start = time.perf_counter()
    report = repair(machine, formula, jobs=jobs)
    seconds = time.perf_counter() - start
    repaired = report.outcome != NO_REPAIR
    first_index = report.candidates_tried if repaired else None
    match = (repaired == cell["repaired"]
             and report.candidates_total == expected_total
             and first_index == cell["first_index"])
    return {"variant": cell["variant"], "property": cell["property"],
            "repaired": repaired,
            "candidates_total": report.candidates_total,
            "mc_calls": report.mc_calls, "first_index": first_index,
            "seconds": round(seconds, 3),
            "expected": {"repaired": cell["repaired"],
                         "candidates_total": expected_total,
                         "first_index": cell["first_index"]},
            "reference": cell["reference"], "match": match}


def _check_structure(table) -> dict:
    out = {}
    for name, info in table["machines"].items():
        machine = load_machine(_read(str(FIXTURES / info["file"])))
        choices = free_choices(machine)
        got = {"choices": len(choices),
               "choice_states": len({c.state for c in choices})}
        out[name] = dict(got, match=(got["choices"] == info["choices"] and
                                     got["choice_states"]
                                     == info["choice_states"]))
    return out


def cmd_reproduce(args) -> int:
    expected = json.loads(_read(str(FIXTURES / "expected.json")))
    tables, all_match = [], True
    for table in expected["tables"]:
        if args.table != "all" and table["name"] != args.table:
            continue
        machines = _check_structure(table)
        cells = [_run_cell(table, cell, args.jobs)
                 for cell in table["cells"]
                 if (args.variant is None or cell["variant"] == args.variant)
                 and (args.property is None
                      or cell["property"] == args.property)]
        ok = (all(m["match"] for m in machines.values())
              and all(c["match"] for c in cells))
        all_match = all_match and ok
        tables.append({"name": table["name"], "machines": machines,
                       "cells": cells, "match": ok})

    lines = []
    for table in tables:
        lines.append(f"table {table['name']}:")
        for name, m in table["machines"].items():
            flag = "ok" if m["match"] else "MISMATCH"
            lines.append(f"  {name}: {m['choices']} choices at "
                         f"{m['choice_states']} states [{flag}]")
        for c in table["cells"]:
            flag = "ok" if c["match"] else "MISMATCH"
            ref = c["reference"]
            lines.append(
                f"  {c['variant']:>10} {c['property']:<18}"
                f" repaired={str(c['repaired']).lower()}"
                f" candidates={c['candidates_total']}"
                f" mc={c['mc_calls']} index={c['first_index']}"
                f" {c['seconds']:.2f}s"
                f" (reference {ref['seconds']}s, {ref['checks']} checks)"
                f" [{flag}]")
    lines.append("result: " + ("match" if all_match else "MISMATCH"))
    _emit(args, {"tables": tables, "match": all_match}, lines)
    return OK if all_match else FALSIFIED


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypertsl",
        description="Temporal stream logic toolkit: parse, approximate, "
                    "check and repair.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--format", choices=("text", "json"), default="text",
                       help="output format (default: text)")
        return p

    p = add("check", cmd_check, "parse and validate property/machine files")
    p.add_argument("files", nargs="+", help=".htsl property or machine JSON")
    p.add_argument("--flavor", choices=("any", "plain", "rel"), default="any",
                   help="require this property flavor (default: any)")

    p = add("approx", cmd_approx,
            "translate a property to its LTL-level approximation")
    p.add_argument("file", help=".htsl property file")

    p = add("pseudo", cmd_pseudo, "pseudo-hyperproperty detection")
    p.add_argument("file", help=".htsl property file")
    p.add_argument("--context", metavar="FILE",
                   help="quantifier-free system description to assume")
    p.add_argument("--level", choices=("tsl", "ltl"), default="tsl",
                   help="tsl: one-directional via the approximation; "
                        "ltl: complete on the translated formula")

    p = add("sat", cmd_sat, "satisfiability of a quantifier-free formula")
    p.add_argument("file", nargs="?", help="formula file")
    p.add_argument("--formula", help="formula text instead of a file")

    p = add("repair", cmd_repair, "repair a machine against a property")
    p.add_argument("--machine", required=True, help="machine JSON file")
    p.add_argument("--property", required=True, help=".htsl property file")
    p.add_argument("--all", action="store_true",
                   help="evaluate every candidate, not just the first hit")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="parallel candidate checks (default: 1)")
    p.add_argument("--output", metavar="FILE",
                   help="also write the repaired machine JSON here")

    p = add("eval", cmd_eval, "evaluate a formula on lasso traces/executions")
    p.add_argument("file", help=".htsl property file")
    p.add_argument("--trace", action="append", default=[], metavar="FILE",
                   help="lasso trace JSON (repeatable)")
    p.add_argument("--execution", action="append", default=[],
                   metavar="FILE", help="lasso execution JSON (repeatable)")
    p.add_argument("--interpretation", metavar="FILE",
                   help="interpretation JSON (for --execution)")

    p = add("reproduce", cmd_reproduce,
            "re-run the bundled case-study matrix against expectations")
    p.add_argument("--table", choices=("all", "voting", "auction"),
                   default="all")
    p.add_argument("--variant", help="only cells of this machine variant")
    p.add_argument("--property", help="only cells of this property")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="parallel candidate checks (default: 1)")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TslError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
