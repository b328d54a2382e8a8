import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchinglab.GraphCore import build_graph
from matchinglab.LabErrors import (
    BudgetExceeded,
    CapExceeded,
    MatchingMismatch,
    NoPerfectMatching,
    NotACycle,
    NotPerfect,
)
from matchinglab.MatchingEngine import (
    FlipSequence,
    FlipStatus,
    PerfectMatching,
    alternating_cycle_neighbors,
    apply_flips,
    decompose_symmetric_difference,
    enumerate_perfect_matchings,
    flip_distance,
    is_adjacent,
    pairwise_adjacency,
    polytope_diameter,
    random_flip_walk,
    require_cycle,
    single_cycle_vertices,
    validate_flip_sequence,
)


def test_enumeration_counts(c4, k33, two_c4, star3):
    assert [m.edges for m in enumerate_perfect_matchings(c4)] == [(0, 2), (1, 3)]
    assert len(enumerate_perfect_matchings(k33)) == 6
    assert len(enumerate_perfect_matchings(two_c4)) == 4
    assert enumerate_perfect_matchings(star3) == []


def test_enumeration_cap(k33):
    with pytest.raises(CapExceeded) as info:
        enumerate_perfect_matchings(k33, cap=5)
    assert info.value.cap == 5


@pytest.mark.parametrize("cap", [0, -3])
def test_enumeration_refuses_empty_cap(c4, cap):
    with pytest.raises(CapExceeded) as info:
        enumerate_perfect_matchings(c4, cap=cap)
    assert info.value.cap == cap
    assert "must be >= 1" in str(info.value)


def test_perfect_matching_validation(c4):
    M = PerfectMatching.of(c4, [2, 0])
    assert M.edges == (0, 2)
    assert M.mates() == [1, 0, 3, 2]
    with pytest.raises(NotPerfect):
        PerfectMatching.of(c4, [0])
    with pytest.raises(NotPerfect):
        PerfectMatching.of(c4, [0, 1])


def test_matching_json_checks_graph(c4, c6):
    M = PerfectMatching.of(c4, [0, 2])
    assert PerfectMatching.from_json(c4, M.to_json()) == M
    with pytest.raises(MatchingMismatch):
        PerfectMatching.from_json(c6, M.to_json())


def test_symmetric_difference(c4, two_c4):
    M, N = enumerate_perfect_matchings(c4)
    assert len(decompose_symmetric_difference(M, M)) == 0
    assert list(decompose_symmetric_difference(M, N)) == [frozenset(range(4))]
    A = PerfectMatching.of(two_c4, [0, 2, 4, 6])
    B = PerfectMatching.of(two_c4, [1, 3, 5, 7])
    cycles = decompose_symmetric_difference(A, B)
    assert len(cycles) == 2
    assert cycles.cycles == (frozenset({0, 1, 2, 3}), frozenset({4, 5, 6, 7}))


def test_adjacency(c4, two_c4):
    M, N = enumerate_perfect_matchings(c4)
    assert is_adjacent(M, N)
    assert not is_adjacent(M, M)
    A = PerfectMatching.of(two_c4, [0, 2, 4, 6])
    B = PerfectMatching.of(two_c4, [1, 3, 5, 7])
    assert not is_adjacent(A, B)


def test_mixing_graphs_is_refused(c4, c6):
    M = enumerate_perfect_matchings(c4)[0]
    N = enumerate_perfect_matchings(c6)[0]
    with pytest.raises(MatchingMismatch):
        is_adjacent(M, N)


def test_neighbor_counts(c4, k33, two_c4):
    M = enumerate_perfect_matchings(c4)[0]
    assert len(list(alternating_cycle_neighbors(M))) == 1
    for M in enumerate_perfect_matchings(k33):
        assert len(set(alternating_cycle_neighbors(M))) == 5
    for M in enumerate_perfect_matchings(two_c4):
        assert len(set(alternating_cycle_neighbors(M))) == 2


def _neighbors_agree(G):
    matchings = enumerate_perfect_matchings(G)
    pairs = pairwise_adjacency(matchings)
    for i, M in enumerate(matchings):
        expected = {matchings[j] for j in range(len(matchings)) if (min(i, j), max(i, j)) in pairs}
        streamed = list(alternating_cycle_neighbors(M))
        assert len(streamed) == len(set(streamed))
        assert set(streamed) == expected


def test_streaming_matches_pairwise_on_fixtures(c4, c6, k33, two_c4):
    for G in (c4, c6, k33, two_c4):
        _neighbors_agree(G)


@settings(max_examples=30, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=4))
def test_streaming_matches_pairwise_on_random_graphs(pairs):
    specs = [(f"l{i}", "L") for i in range(4)] + [(f"r{i}", "R") for i in range(4)]
    G = build_graph(specs, [(i, 4 + j) for i, j in sorted(pairs)])
    _neighbors_agree(G)


def test_flip_distance_small_cases(c4, two_c4):
    M, N = enumerate_perfect_matchings(c4)
    assert flip_distance(M, M).distance == 0
    assert flip_distance(M, N).distance == 1
    A = PerfectMatching.of(two_c4, [0, 2, 4, 6])
    B = PerfectMatching.of(two_c4, [1, 3, 5, 7])
    result = flip_distance(A, B)
    assert result.distance == 2
    check = validate_flip_sequence(result.witness)
    assert check.ok and check.final == B


def test_flip_distance_budget(two_c4):
    A = PerfectMatching.of(two_c4, [0, 2, 4, 6])
    B = PerfectMatching.of(two_c4, [1, 3, 5, 7])
    with pytest.raises(BudgetExceeded):
        flip_distance(A, B, budget=1)


def test_distance_bounded_by_cycle_count(k33):
    matchings = enumerate_perfect_matchings(k33)
    for M in matchings:
        for N in matchings:
            d = flip_distance(M, N).distance
            assert d <= len(decompose_symmetric_difference(M, N))
            assert (d == 1) == is_adjacent(M, N)


@pytest.mark.parametrize("name, expected", [("c4", 1), ("c6", 1), ("k33", 1), ("two_c4", 2)])
def test_polytope_diameter(name, expected, request):
    G = request.getfixturevalue(name)
    report = polytope_diameter(G)
    assert report.diameter == expected
    assert report.circuit_diameter == expected
    assert len(report.witness) == expected
    assert validate_flip_sequence(report.witness).final == report.pair[1]
    assert report.to_json()["matchings"] == report.matching_count


def test_polytope_diameter_with_workers(k33):
    assert polytope_diameter(k33, workers=2).diameter == polytope_diameter(k33).diameter


def test_empty_polytope(star3):
    with pytest.raises(NoPerfectMatching):
        polytope_diameter(star3)


def test_validate_flip_sequence_cases(c4, k33):
    M, N = enumerate_perfect_matchings(c4)
    empty = validate_flip_sequence(FlipSequence(M))
    assert empty.ok and empty.final == M
    once = validate_flip_sequence(FlipSequence(M, (frozenset(range(4)),)))
    assert once.ok and once.final == N
    twice = validate_flip_sequence(FlipSequence(M, (frozenset(range(4)), frozenset(range(4)))))
    assert twice.ok and twice.final == M

    path = validate_flip_sequence(FlipSequence(M, (frozenset({0, 1}),)))
    assert path.status is FlipStatus.NOT_A_CYCLE and path.index == 0

    K = PerfectMatching.of(k33, [0, 4, 8])
    # l0 r1 l2 r0 carries only one matched edge
    bad = validate_flip_sequence(FlipSequence(K, (frozenset({0, 1, 6, 7}),)))
    assert bad.status is FlipStatus.NOT_ALTERNATING
    assert not bad.ok


def test_cycle_vertex_order(c4):
    order = single_cycle_vertices(c4, range(4))
    assert order[0] == 0 and sorted(order) == [0, 1, 2, 3]
    assert single_cycle_vertices(c4, [0, 1]) is None
    with pytest.raises(NotACycle):
        require_cycle(c4, [0, 1, 2])


def test_apply_flips_and_random_walk(k33):
    M = PerfectMatching.of(k33, [0, 4, 8])
    N = apply_flips(M, [frozenset({0, 1, 4, 3})])
    assert N.edges == (1, 3, 8)
    walked = random_flip_walk(M, 10, random.Random(3))
    assert PerfectMatching.of(k33, walked.edges) == walked
