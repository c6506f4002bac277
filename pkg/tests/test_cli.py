"""End-to-end tests for the command-line interface.

Each subcommand is driven through ``main(argv)`` directly so assertions can
see exit codes and captured output without spawning processes.  The exit
codes asserted here are contractual (documented in the README): 0 for
success/true/repaired, 1 for unsat/false/no-repair/mismatch, 2 for errors.
"""

import json
from pathlib import Path

import pytest

import hypertsl as H
from hypertsl.cli import main

FIXTURES = Path(H.__file__).parent / "fixtures"
ONLY_VOTE = str(FIXTURES / "voting/only_vote.machine.json")
LOCAL_DET = str(FIXTURES / "voting/only_vote/local_determinism.htsl")
CONJUNCTION = str(FIXTURES / "voting/only_vote/conjunction.htsl")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out), err


# ---------------------------------------------------------------------------
# check


def test_check_accepts_fixture_files(capsys):
    code, out, _ = run(capsys, "check", ONLY_VOTE, LOCAL_DET)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("OK") and "2 free choices" in lines[0]
    assert lines[1].startswith("OK") and "p1, p2" in lines[1]


def test_check_json_document(capsys):
    code, doc, _ = run_json(capsys, "check", ONLY_VOTE)
    assert code == 0
    assert doc["files"][0]["kind"] == "machine"
    assert doc["files"][0]["states"] == 1


def test_check_rejects_unbound_variable(tmp_path, capsys):
    bad = tmp_path / "bad.htsl"
    bad.write_text("forall p1. G voteA@p3\n")
    code, out, _ = run(capsys, "check", str(bad))
    assert code == 2
    assert out.startswith("ERROR") and "p3" in out


def test_check_rejects_rel_file_under_plain_flag(tmp_path, capsys):
    rel = tmp_path / "rel.htsl"
    rel.write_text(
        "flavor: rel\nforall p1. forall p2. G eq(votesA@p1, votesB@p2)\n")
    assert run(capsys, "check", str(rel))[0] == 0
    code, out, _ = run(capsys, "check", "--flavor", "plain", str(rel))
    assert code == 2
    assert "flavor" in out


def test_check_reports_missing_file(capsys):
    code, out, err = run(capsys, "check", "no-such-file.htsl")
    assert code == 2
    assert out.startswith("ERROR")


# ---------------------------------------------------------------------------
# approx


def test_approx_emits_the_translation(capsys):
    code, doc, _ = run_json(capsys, "approx", LOCAL_DET)
    assert code == 0
    printed = H.print_property(
        H.translate_formula(H.parse_property(Path(LOCAL_DET).read_text())))
    assert doc["result"] == printed
    # the emitted text parses back to the same formula
    reparsed = H.parse_property(doc["result"])
    assert H.print_property(reparsed) == printed


def test_approx_rejects_rel_flavor(tmp_path, capsys):
    rel = tmp_path / "rel.htsl"
    rel.write_text(
        "flavor: rel\nforall p1. forall p2. G eq(votesA@p1, votesB@p2)\n")
    code, _, err = run(capsys, "approx", str(rel))
    assert code == 2
    assert "approximation" in err


# ---------------------------------------------------------------------------
# pseudo


def test_pseudo_false_body_is_pseudo(tmp_path, capsys):
    prop = tmp_path / "p.htsl"
    prop.write_text("forall p1. forall p2. G false\n")
    code, doc, _ = run_json(capsys, "pseudo", "--level", "ltl", str(prop))
    assert code == 0
    assert doc["verdict"] == "pseudo"
    assert "collapsed" in doc


def test_pseudo_agreement_yields_witness_pair(tmp_path, capsys):
    prop = tmp_path / "p.htsl"
    prop.write_text("forall p1. forall p2. G (p(a)@p1 <-> p(a)@p2)\n")
    code, doc, _ = run_json(capsys, "pseudo", "--level", "ltl", str(prop))
    assert code == 0
    assert doc["verdict"] == "not_pseudo"
    assert len(doc["witnesses"]) >= 2
    for witness in doc["witnesses"]:
        assert H.trace_from_json(witness).loop


def test_pseudo_tsl_level_degrades_to_unknown(tmp_path, capsys):
    prop = tmp_path / "p.htsl"
    prop.write_text("forall p1. forall p2. G (p(a)@p1 <-> p(a)@p2)\n")
    code, doc, _ = run_json(capsys, "pseudo", str(prop))
    assert code == 0
    assert doc["level"] == "tsl"
    assert doc["verdict"] == "unknown"


def test_pseudo_context_file(tmp_path, capsys):
    prop = tmp_path / "p.htsl"
    prop.write_text("forall p1. forall p2. G ([c <- f()]@p1 <-> [c <- f()]@p2)\n")
    context = tmp_path / "ctx.htsl"
    context.write_text("G [c <- f()]\n")
    code, doc, _ = run_json(capsys, "pseudo", "--context", str(context),
                            str(prop))
    assert code == 0
    assert doc["verdict"] == "pseudo"


# ---------------------------------------------------------------------------
# sat


def test_sat_witness_reverifies(tmp_path, capsys):
    formula = tmp_path / "f.htsl"
    formula.write_text("guarantee: (p(a) W [c <- f()])\n")
    code, doc, _ = run_json(capsys, "sat", str(formula))
    assert code == 0 and doc["satisfiable"] is True
    converted = H.syntactic_conversion(
        H.parse_property(formula.read_text()))
    assert H.eval_ltl(converted, H.trace_from_json(doc["witness"]))


def test_sat_contradiction_exits_one(capsys):
    code, doc, _ = run_json(capsys, "sat", "--formula",
                            "guarantee: p(a) && !p(a)")
    assert code == 1
    assert doc == {"satisfiable": False}


def test_sat_rejects_quantified_formula(capsys):
    code, _, err = run(capsys, "sat", "--formula", "forall p1. G p(a)@p1")
    assert code == 2
    assert "quantifier-free" in err


# ---------------------------------------------------------------------------
# eval


def write_trace(path, stem, loop):
    path.write_text(json.dumps({"stem": stem, "loop": loop}))
    return str(path)


def test_eval_single_trace(tmp_path, capsys):
    formula = tmp_path / "f.htsl"
    formula.write_text("guarantee: G (voteA -> [winner <- A()])\n")
    good = write_trace(tmp_path / "good.json",
                       [], [["voteA", "[winner <- A()]"]])
    bad = write_trace(tmp_path / "bad.json",
                      [["voteA", "[winner <- B()]"]], [[]])
    assert run(capsys, "eval", str(formula), "--trace", good)[0] == 0
    code, out, _ = run(capsys, "eval", str(formula), "--trace", bad)
    assert code == 1 and out.strip() == "false"


def test_eval_hyper_over_trace_pool(tmp_path, capsys):
    agree = write_trace(tmp_path / "a.json", [], [["voteA"]])
    other = write_trace(tmp_path / "b.json", [], [[]])
    formula = tmp_path / "f.htsl"
    formula.write_text("forall p1. forall p2. G (voteA@p1 <-> voteA@p2)\n")
    assert run(capsys, "eval", str(formula),
               "--trace", agree, "--trace", agree)[0] == 0
    assert run(capsys, "eval", str(formula),
               "--trace", agree, "--trace", other)[0] == 1


def test_eval_execution_with_interpretation(tmp_path, capsys):
    formula = tmp_path / "f.htsl"
    formula.write_text("guarantee: G p(c)\n")
    execution = tmp_path / "e.json"
    execution.write_text(json.dumps(
        {"stem": [], "loop": [{"inputs": {}, "updates": {"c": "c"}}]}))
    interp = tmp_path / "i.json"
    interp.write_text(json.dumps({
        "domain": ["v0"], "init": {"c": "v0"},
        "functions": {}, "predicates": {"p": [[["v0"], True]]}}))
    code, out, _ = run(capsys, "eval", str(formula),
                       "--execution", str(execution),
                       "--interpretation", str(interp))
    assert code == 0 and out.strip() == "true"


def test_eval_requires_trace_or_execution(tmp_path, capsys):
    formula = tmp_path / "f.htsl"
    formula.write_text("guarantee: G p(a)\n")
    code, _, err = run(capsys, "eval", str(formula))
    assert code == 2 and "--trace" in err


# ---------------------------------------------------------------------------
# repair


def test_repair_emits_machine_and_stats(tmp_path, capsys):
    out_file = tmp_path / "repaired.json"
    code, doc, _ = run_json(capsys, "repair", "--machine", ONLY_VOTE,
                            "--property", LOCAL_DET,
                            "--output", str(out_file))
    assert code == 0
    assert doc["outcome"] == "repaired"
    assert doc["stats"]["candidates_total"] == 4
    assert doc["stats"]["first_index"] == 1
    repaired = H.load_machine(out_file.read_text())
    base = H.load_machine(Path(ONLY_VOTE).read_text())
    assert repaired == H.load_machine(doc["machine"])
    assert set(repaired.transitions) <= set(base.transitions)
    assert not H.free_choices(repaired)


def test_repair_all_mode_reports_passing_candidates(capsys):
    code, doc, _ = run_json(capsys, "repair", "--machine", ONLY_VOTE,
                            "--property", CONJUNCTION, "--all")
    assert code == 0
    assert doc["stats"]["passing"] == [2]
    assert doc["stats"]["first_index"] == 2
    assert doc["stats"]["candidates_tried"] == 4


def test_repair_no_repair_exits_one(tmp_path, capsys):
    impossible = tmp_path / "imp.htsl"
    impossible.write_text("forall p1. G false\n")
    code, doc, _ = run_json(capsys, "repair", "--machine", ONLY_VOTE,
                            "--property", str(impossible))
    assert code == 1
    assert doc["outcome"] == "no_repair"
    assert "machine" not in doc
    assert doc["counterexample"]


def test_repair_text_format_has_stats_block(capsys):
    code, out, _ = run(capsys, "repair", "--machine", ONLY_VOTE,
                       "--property", LOCAL_DET)
    assert code == 0
    assert out.startswith("outcome: repaired")
    assert "  mc_calls: 2" in out
    assert "repaired machine:" in out


def test_repair_jobs_flag(capsys):
    code, doc, _ = run_json(capsys, "repair", "--machine", ONLY_VOTE,
                            "--property", CONJUNCTION, "--jobs", "2")
    assert code == 0
    assert doc["stats"]["first_index"] == 2


# ---------------------------------------------------------------------------
# reproduce


def test_reproduce_only_vote_column(capsys):
    code, doc, _ = run_json(capsys, "reproduce", "--table", "voting",
                            "--variant", "only_vote")
    assert code == 0
    assert doc["match"] is True
    table = doc["tables"][0]
    assert len(table["cells"]) == 7
    assert all(cell["match"] for cell in table["cells"])
    assert table["machines"]["plus_owner"]["choices"] == 8


def test_reproduce_auction_row(capsys):
    code, doc, _ = run_json(capsys, "reproduce", "--table", "auction",
                            "--property", "local_determinism")
    assert code == 0
    cell = doc["tables"][0]["cells"][0]
    assert cell["repaired"] is True
    assert cell["candidates_total"] == 16
    assert doc["tables"][0]["machines"]["auction"]["choice_states"] == 2


def test_reproduce_text_mentions_reference_numbers(capsys):
    code, out, _ = run(capsys, "reproduce", "--table", "auction",
                       "--property", "local_symmetry")
    assert code == 0
    assert "(reference 17.42s, 2 checks)" in out
    assert out.rstrip().endswith("result: match")
