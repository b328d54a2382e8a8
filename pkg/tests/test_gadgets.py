import pytest

from matchinglab.GadgetLib import (
    LADDER_BOTTOM_OPEN,
    LADDER_CLOSURE_MATCHED,
    LADDER_TOP_OPEN,
    Direction,
    GadgetKind,
    StateLabel,
    Verdict,
    build_city,
    build_forall,
    build_ladder,
    build_tower,
    check_city,
    check_damage,
    damage_forbidden,
    check_forall,
    check_ladder_necessary,
    check_ladder_states,
    check_tower_lower_bound,
    check_tower_upper_bound,
    check_xor_exclusivity,
    city_parity_consistent,
    classify_cycle,
    classify_state,
    enumerate_semi_default_ladder_states,
    forall_harness,
    gadget_edges,
    insert_xor,
    ladder_harness,
    ladder_state_matching,
    ladder_transfer_graph,
    ladder_transfer_plan,
    min_well_behaved_sequence,
    role_edge,
    tower_harness,
    tower_state_pairs,
    tower_transfer_sequence,
)
from matchinglab.GraphCore import BipartiteGraph, is_bipartite_certificate
from matchinglab.LabErrors import BudgetExceeded, EdgeNotFound, NotACycle, ScaleInvalid, StateNotSemiDefault, WrongGraph
from matchinglab.MatchingEngine import PerfectMatching, enumerate_perfect_matchings, validate_flip_sequence


def test_tower_size():
    G, tower = build_tower(6)
    assert (G.num_vertices, G.num_edges) == (16, 21)
    assert len(gadget_edges(G, tower)) == 21
    assert set(tower.roles) == {"v", "w"} | {f"{c}_{i}" for c in "ab" for i in range(7)}


def test_ladder_size():
    G, ladder = build_ladder()
    assert (G.num_vertices, G.num_edges) == (14, 17)
    assert len(ladder.roles) == 14


def test_city_chains_towers():
    G, city = build_city(2, 2)
    assert (G.num_vertices, G.num_edges) == (14, 17)
    first, second = city.children
    assert second.roles["v"] == first.roles["b_0"]
    assert second.roles["a_0"] == first.roles["w"]
    assert is_bipartite_certificate(G).ok


def test_bad_scales():
    with pytest.raises(ScaleInvalid):
        build_tower(0)
    with pytest.raises(ScaleInvalid):
        build_city(0, 2)
    with pytest.raises(ScaleInvalid):
        build_forall(0)
    with pytest.raises(ScaleInvalid):
        tower_state_pairs(1, StateLabel.LOCKED)


def test_insert_xor_keeps_bipartite(c6):
    for f in (1, 2):
        G, xor = insert_xor(c6, 0, f)
        assert isinstance(G, BipartiteGraph)
        assert is_bipartite_certificate(G).ok
        assert G.num_vertices == 6 + 8 + 4 * 4
        assert len(xor.of_kind(GadgetKind.CITY)) == 4
    with pytest.raises(EdgeNotFound):
        insert_xor(c6, 1, 1)


def test_forall_structure():
    G, forall = build_forall(2)
    assert is_bipartite_certificate(G).ok
    assert len(forall.of_kind(GadgetKind.LADDER)) == 2
    assert len(forall.of_kind(GadgetKind.XOR)) == 3
    assert len(forall.of_kind(GadgetKind.CITY)) == 4
    assert {f"x_{i}" for i in range(1, 11)} <= set(forall.roles)


def test_forall_harness_census():
    fh = forall_harness(2)
    counts = fh.registry.census()
    assert counts["city"] == 17
    assert counts["tower"] == 17
    assert counts["xor"] == 3
    assert counts["ladder"] == 2
    assert counts["forall"] == 1


def test_tower_states():
    h = 4
    harness = tower_harness(h)
    default = harness.matching(tower_state_pairs(h, StateLabel.DEFAULT))
    locked = harness.matching(tower_state_pairs(h, StateLabel.LOCKED))
    d = classify_state(harness.handle, default)
    assert d.label is StateLabel.DEFAULT and d.semi_default
    assert d.horizontals == frozenset({1, 2, 3, 4})
    lk = classify_state(harness.handle, locked)
    assert lk.label is StateLabel.LOCKED and lk.semi_default
    assert lk.horizontals == frozenset({1, 2})


def test_ladder_states():
    harness = ladder_harness()
    bottom = harness.matching(LADDER_BOTTOM_OPEN, LADDER_CLOSURE_MATCHED)
    state = classify_state(harness.handle, bottom)
    assert state.label is StateLabel.BOTTOM_OPEN
    assert state.horizontals == frozenset({5})
    top = classify_state(harness.handle, harness.matching(LADDER_TOP_OPEN, LADDER_CLOSURE_MATCHED))
    assert top.label is StateLabel.TOP_OPEN
    assert top.horizontals == frozenset({1})
    default = classify_state(harness.handle, ladder_state_matching(harness, range(1, 6)))
    assert default.label is StateLabel.DEFAULT


def test_classify_state_refuses_foreign_handle(c4):
    _, tower = build_tower(3)
    M = enumerate_perfect_matchings(c4)[0]
    with pytest.raises(WrongGraph):
        classify_state(tower, M)


def test_city_parity_on_every_matching():
    G, city = build_city(1, 2)
    # a lone city has only matchings with the entry edge matched
    for M in enumerate_perfect_matchings(G):
        assert city_parity_consistent(city, M)
        assert classify_state(city, M).label is StateLabel.MATCHED


def test_tower_top_square_is_ill_behaved():
    h = 3
    G, tower = build_tower(h)
    square = frozenset(
        role_edge(G, tower, *pair)
        for pair in ((f"a_{h}", f"a_{h - 1}"), (f"a_{h - 1}", f"b_{h - 1}"), (f"b_{h - 1}", f"b_{h}"), (f"a_{h}", f"b_{h}"))
    )
    assert classify_cycle(tower, square, graph=G).verdict is Verdict.ILL_BEHAVED
    with pytest.raises(NotACycle):
        classify_cycle(tower, list(square)[:2], graph=G)


def test_tower_harness_visit_is_well_behaved():
    harness = tower_harness(2)
    M = harness.matching(tower_state_pairs(2, StateLabel.LOCKED))
    goal = harness.matching(tower_state_pairs(2, StateLabel.DEFAULT))
    result = min_well_behaved_sequence(harness, M, goal)
    assert result.length == 2
    for cycle in result.sequence.cycles:
        verdict = classify_cycle(harness.handle, cycle, graph=harness.graph)
        assert verdict.verdict is Verdict.WELL_BEHAVED


@pytest.mark.parametrize("h", [2, 3, 4])
def test_tower_lower_bound(h):
    verdict = check_tower_lower_bound(h)
    assert verdict.ok, verdict.detail
    assert verdict.measurements["min"] == 2 * h - 2


@pytest.mark.parametrize("h", [2, 3])
def test_tower_upper_bound(h):
    verdict = check_tower_upper_bound(h)
    assert verdict.ok
    assert verdict.checked == verdict.measurements["states"] ** 2


def test_tower_transfer_has_length_2h():
    h = 3
    harness = tower_harness(h)
    locked = harness.matching(tower_state_pairs(h, StateLabel.LOCKED))
    default = harness.matching(tower_state_pairs(h, StateLabel.DEFAULT))
    seq = tower_transfer_sequence(harness, default, locked)
    assert len(seq) == 2 * h
    check = validate_flip_sequence(seq)
    assert check.ok and check.final == locked


def test_city_lemma():
    verdict = check_city(2, 2)
    assert verdict.ok
    assert verdict.checked > 0


def test_ladder_lemmas():
    states = enumerate_semi_default_ladder_states()
    assert len(states) == 8
    assert ladder_transfer_graph().diameter() == 2
    assert check_ladder_states().ok
    necessary = check_ladder_necessary()
    assert necessary.ok
    assert necessary.measurements["bottom_open_min"] == 4
    assert necessary.measurements["top_open_directions"] == ["tttt"]


def test_ladder_transfer_plans():
    assert ladder_transfer_plan({5}, range(1, 6)) == "bbbb"
    assert ladder_transfer_plan({1}, range(1, 6)) == "tttt"
    idle = ladder_transfer_plan(range(1, 6), range(1, 6))
    assert idle in ("tttt", "bbbb")
    across = ladder_transfer_plan({5}, {1})
    assert len(across) == 4
    assert across[0] == across[1] and across[2] == across[3]
    with pytest.raises(StateNotSemiDefault):
        ladder_transfer_plan({2}, range(1, 6))


def test_xor_exclusivity():
    verdict = check_xor_exclusivity((1, 1))
    assert verdict.ok
    assert verdict.measurements["regular_cycles"] > 0


def test_forall_gadget_lemma():
    verdict = check_forall(2)
    assert verdict.ok
    assert verdict.measurements["top_state"] > 0
    assert verdict.measurements["bottom_state"] > 0


def test_damage_bound():
    verdict = check_damage(2)
    assert verdict.ok
    assert verdict.measurements["portals"] == 4
    assert verdict.checked == sum(verdict.measurements["by_ladders"].values())
    assert verdict.checked > 0
    # two ladders between the same portals close a cycle through both
    assert verdict.measurements["max_visited"] == 2


@pytest.mark.slow
def test_damage_bound_is_reached():
    verdict = check_damage(5)
    assert verdict.ok
    assert verdict.checked == sum(verdict.measurements["by_ladders"].values())
    # x_2 -> L1 -> x_7 -> L2 -> x_3 -> L3 -> x_6 -> L4 -> x_2
    assert verdict.measurements["max_visited"] == 4


def test_damage_budget():
    with pytest.raises(BudgetExceeded) as info:
        check_damage(2, budget=10)
    assert info.value.budget == 10


def test_damage_cut_keeps_ladder_spines():
    fh = forall_harness(3)
    banned = damage_forbidden(fh.graph, fh.registry, fh.handle)
    for ladder in fh.handle.of_kind(GadgetKind.LADDER):
        cut = banned & gadget_edges(fh.graph, ladder)
        assert cut == {role_edge(fh.graph, ladder, f"a_{i}", f"b_{i}") for i in (2, 3, 4)}


def test_forall_regular_cycles_are_directional():
    from matchinglab.GadgetLib import regular_cycles

    fh = forall_harness(2)
    for cycle in regular_cycles(fh.graph, fh.registry):
        cls = classify_cycle(fh.handle, cycle, graph=fh.graph, registry=fh.registry)
        assert len(cls.ladders) == 1
        wanted = Direction.TOP if cls.verdict is Verdict.TOP_STATE else Direction.BOTTOM
        assert cls.direction is wanted


def test_harness_matchings_are_perfect():
    harness = ladder_harness()
    for state in enumerate_semi_default_ladder_states():
        M = ladder_state_matching(harness, state.horizontals)
        assert PerfectMatching.of(harness.graph, M.edges) == M
