from fractions import Fraction

import pytest

from matchinglab.GraphCore import DirectedGraph
from matchinglab.Instances import CnfFormula
from matchinglab.LabCommands import cycle_graph
from matchinglab.LabErrors import InvalidWalk, TooManyPairs, TooManyVariables
from matchinglab.OracleSuite import (
    WalkRecord,
    cnf_brute_force,
    eps_good_check,
    forall_exists_decision,
    ham_cycle,
    ham_cycle_respecting,
    oracle_provider,
    walk_from_order,
)


def test_directed_triangle():
    H = DirectedGraph(3, [(0, 1), (1, 2), (2, 0)])
    assert ham_cycle(H) == [0, 1, 2]
    assert ham_cycle(H, forbidden=[0]) is None
    assert ham_cycle(H, required=[1]) == [0, 1, 2]


def test_directed_search_respects_orientation():
    H = DirectedGraph(3, [(1, 0), (2, 1), (0, 2)])
    assert ham_cycle(H) == [0, 2, 1]
    assert ham_cycle(DirectedGraph(3, [(0, 1), (1, 2)])) is None


def test_mode_checks():
    H = DirectedGraph(3, [(0, 1), (1, 2), (2, 0)])
    with pytest.raises(TypeError):
        ham_cycle(H, "undirected")
    with pytest.raises(TypeError):
        ham_cycle(cycle_graph(4), "directed")
    with pytest.raises(ValueError):
        ham_cycle(H, "mixed")
    assert ham_cycle(DirectedGraph(2, [(0, 1), (1, 0)])) is None


def test_undirected_cycle_orientation():
    order = ham_cycle(cycle_graph(5), "undirected")
    assert order == [0, 1, 2, 3, 4]


def test_respecting_patterns(yes_instance):
    via_e = ham_cycle_respecting(yes_instance, yes_instance.pattern(["e"]))
    via_ebar = ham_cycle_respecting(yes_instance, yes_instance.pattern(["ebar"]))
    assert via_e[:2] == [0, 1]
    assert via_ebar[:2] == [0, 2]
    provide = oracle_provider(yes_instance)
    assert provide(yes_instance.pattern(["e"])) == via_e


def test_forall_exists_yes(yes_instance):
    result = forall_exists_decision(yes_instance)
    assert result.verdict
    assert result.refuting is None
    assert len(result.table) == 2
    assert result.to_json()["verdict"] == "yes"


def test_forall_exists_no(no_instance):
    result = forall_exists_decision(no_instance)
    assert not result.verdict
    assert str(result.refuting) == "{~e1}"
    doc = result.to_json()
    assert doc["refuting_pattern"] == "{~e1}"
    assert doc["table"][0]["cycle"] is not None


def test_forall_exists_cap(yes_instance):
    with pytest.raises(TooManyPairs):
        forall_exists_decision(yes_instance, max_pairs=0)


def test_cnf_brute_force(single_clause, contradiction):
    sat = cnf_brute_force(single_clause)
    assert sat.satisfiable and sat.max_satisfied == 1
    assert sat.witness == (True,)
    unsat = cnf_brute_force(contradiction)
    assert not unsat.satisfiable
    assert unsat.max_satisfied == 1
    assert unsat.to_json()["clauses"] == 2


def test_cnf_variable_cap():
    with pytest.raises(TooManyVariables):
        cnf_brute_force(CnfFormula(3, ((1, 2, 3),)), max_vars=2)


def test_walk_validation():
    G = cycle_graph(5)
    with pytest.raises(InvalidWalk):
        WalkRecord((0,), G)
    with pytest.raises(InvalidWalk):
        WalkRecord((0, 2), G)
    with pytest.raises(InvalidWalk):
        WalkRecord((0, 7), G)
    back_and_forth = WalkRecord((0, 1), G)
    assert back_and_forth.visits[0] == 1
    assert back_and_forth.levels()[0] == frozenset({2, 3, 4})


def test_eps_good():
    G = cycle_graph(10)
    tour = walk_from_order(G, range(10))
    assert eps_good_check(tour, 0) == (True, 10)
    detour = WalkRecord(tuple(range(10)) + (0, 9), G)
    assert detour.w1_size == 8
    assert eps_good_check(detour, Fraction(1, 10)) == (False, 8)
    assert eps_good_check(detour, "1/5") == (True, 8)
    assert eps_good_check(detour, 0.2)[0]
    with pytest.raises(InvalidWalk):
        eps_good_check(detour, 0, n=11)
