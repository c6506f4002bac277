"""Tests for the bundled case-study fixtures and their generator.

The fixtures ship inside the package so the `reproduce` subcommand works
from any install.  These tests pin three things: the committed files stay
in sync with the generator, the machines have the structural shape the
expected-results manifest claims (free-choice and candidate counts), and
every property file parses to a two-variable universal formula.
"""

import json
from pathlib import Path

import pytest

import hypertsl as H
from hypertsl import fixture_gen

FIXTURES = Path(H.__file__).parent / "fixtures"


def load_expected():
    return json.loads((FIXTURES / "expected.json").read_text())


# ---------------------------------------------------------------------------
# generator sync


def test_generator_matches_committed_files():
    rendered = fixture_gen.render_all()
    on_disk = {
        str(p.relative_to(FIXTURES)): p.read_text()
        for p in FIXTURES.rglob("*") if p.is_file()
    }
    assert rendered == on_disk


def test_expected_manifest_is_valid_json():
    doc = load_expected()
    names = [table["name"] for table in doc["tables"]]
    assert names == ["voting", "auction"]


# ---------------------------------------------------------------------------
# structural shape backing the expected-results manifest


def machines_in(doc):
    for table in doc["tables"]:
        for name, info in table["machines"].items():
            yield table["name"], name, info


def test_machine_files_load_and_match_structure():
    for _, _, info in machines_in(load_expected()):
        machine = H.load_machine((FIXTURES / info["file"]).read_text())
        choices = H.free_choices(machine)
        assert len(choices) == info["choices"]
        assert len({c.state for c in choices}) == info["choice_states"]
        total = 1
        for choice in choices:
            total *= len(choice.options)
        assert total == info["candidates_total"]


def test_voting_free_choice_counts():
    doc = load_expected()
    voting = doc["tables"][0]["machines"]
    assert {v: info["choices"] for v, info in voting.items()} == {
        "only_vote": 2, "plus_close": 4, "plus_owner": 8, "full": 8}


def test_auction_choices_sit_at_two_nodes():
    machine = H.load_machine(
        (FIXTURES / "auction/auction.machine.json").read_text())
    choices = H.free_choices(machine)
    assert len(choices) == 4
    assert len({c.state for c in choices}) == 2


def test_voting_state_counts():
    expected = {"only_vote": 1, "plus_close": 3, "plus_owner": 3, "full": 3}
    for variant, count in expected.items():
        machine = H.load_machine(
            (FIXTURES / f"voting/{variant}.machine.json").read_text())
        assert len(machine.states) == count, variant


# ---------------------------------------------------------------------------
# property files


@pytest.mark.parametrize("path", sorted(FIXTURES.rglob("*.htsl")),
                         ids=lambda p: str(p.relative_to(FIXTURES)))
def test_property_is_two_trace_universal(path):
    formula = H.parse_property(path.read_text())
    assert isinstance(formula, H.HyperTslFormula)
    assert [q for q, _ in formula.prefix] == [H.FORALL, H.FORALL]


def test_properties_speak_about_their_machine():
    """Every atom a property mentions exists in its machine's universe."""
    doc = load_expected()
    for table in doc["tables"]:
        for cell in table["cells"]:
            machine = H.load_machine(
                (FIXTURES / cell["machine"]).read_text())
            terms = H.collect_terms(
                H.parse_property((FIXTURES / cell["file"]).read_text()))
            mentioned = ({H.PredicateAp(t) for t in terms.predicates}
                         | {H.UpdateAp(t) for t in terms.updates})
            assert mentioned <= set(machine.universe), cell["file"]


# ---------------------------------------------------------------------------
# manifest cells


def test_every_cell_points_at_existing_files():
    doc = load_expected()
    for table in doc["tables"]:
        files = {info["file"] for info in table["machines"].values()}
        for cell in table["cells"]:
            assert (FIXTURES / cell["file"]).is_file()
            assert cell["machine"] in files
            assert cell["machine"] == table["machines"][cell["variant"]]["file"]
            assert cell["repaired"] is True
            assert cell["first_index"] >= 1
            assert cell["reference"]["seconds"] > 0
            assert cell["reference"]["checks"] >= 1


def test_cell_matrix_is_complete():
    doc = load_expected()
    voting = doc["tables"][0]
    pairs = {(c["variant"], c["property"]) for c in voting["cells"]}
    properties = {c["property"] for c in voting["cells"]}
    assert len(pairs) == len(voting["cells"]) == 28
    assert pairs == {(m, p) for m in voting["machines"] for p in properties}
    auction = doc["tables"][1]
    assert {c["property"] for c in auction["cells"]} == {
        "local_determinism", "local_symmetry"}
