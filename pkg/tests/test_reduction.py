import random
from fractions import Fraction

import pytest

from matchinglab.GadgetLib import GadgetKind, StateLabel, classify_state
from matchinglab.GraphCore import DirectedGraph, is_bipartite_certificate
from matchinglab.Instances import (
    CnfFormula,
    HamInstance,
    ScaleProfile,
    complete_no_instance,
    complete_yes_instance,
    random_cnf,
    random_ham_instance,
)
from matchinglab.LabCommands import cycle_graph
from matchinglab.LabErrors import HamProviderFailed, InfeasibleScale, NotRegular, ProfileMismatch
from matchinglab.MatchingEngine import random_flip_walk, validate_flip_sequence
from matchinglab.OracleSuite import cnf_brute_force, forall_exists_decision, ham_cycle, oracle_provider
from matchinglab.ReductionPipeline import (
    build_folklore_hc,
    build_GH,
    build_inapprox_G,
    census_GH,
    check_inapprox,
    check_semi_default_density,
    default_matching,
    epsilon_constants,
    extract_ham_cycle,
    extract_walk,
    inapprox_matchings,
    inapprox_projection,
    is_semi_default,
    pattern_matching,
    regularity_census,
    semi_default_projection,
    synthesize_flip_sequence,
    synthesize_inapprox_sequence,
)


@pytest.fixture
def gh(yes_instance, desk_profile):
    return build_GH(yes_instance, desk_profile)


def test_desk_census(gh, yes_instance, desk_profile):
    built = gh.census()
    assert built == census_GH(yes_instance, desk_profile)
    assert built["cities"] == 20
    assert built["xors"] == 3
    assert built["foralls"] == 1
    assert built["v_s"] == 26
    assert (built["vertices"], built["edges"]) == (172, 241)
    assert is_bipartite_certificate(gh.graph).ok


DESK_INSTANCES = {
    "yes-4-1": lambda: complete_yes_instance(4, 1),
    "yes-5-1": lambda: complete_yes_instance(5, 1),
    "yes-6-2": lambda: complete_yes_instance(6, 2),
    "no-4-1": lambda: complete_no_instance(4, 1),
    "no-6-2": lambda: complete_no_instance(6, 2),
    "random-5-1": lambda: random_ham_instance(5, 1, random.Random(1)),
    "random-6-1": lambda: random_ham_instance(6, 1, random.Random(2)),
    "random-6-2": lambda: random_ham_instance(6, 2, random.Random(3)),
    "random-7-2": lambda: random_ham_instance(7, 2, random.Random(4)),
    "random-8-2": lambda: random_ham_instance(8, 2, random.Random(5)),
}


@pytest.mark.parametrize("name", sorted(DESK_INSTANCES))
def test_census_on_desk_instances(name, desk_profile):
    instance = DESK_INSTANCES[name]()
    n, k = instance.n, instance.k
    built = build_GH(instance, desk_profile)
    census = built.census()
    assert census == census_GH(instance, desk_profile)
    assert census["cities"] == n + 16 * k
    assert census["v_s"] == len(built.v_s) == n + 22 * k
    assert is_bipartite_certificate(built.graph).ok


def test_instance_without_pairs(desk_profile):
    inst = HamInstance(DirectedGraph(3, [(0, 1), (1, 2), (2, 0)]), ())
    built = build_GH(inst, desk_profile).census()
    assert built["cities"] == 3
    assert built["vertices"] == 6 + 3 * 6


def test_vertex_limit(yes_instance, desk_profile):
    with pytest.raises(InfeasibleScale) as info:
        build_GH(yes_instance, desk_profile, vertex_limit=100)
    assert info.value.vertices == 172
    # the closed form stays available past the limit
    paper = census_GH(yes_instance, ScaleProfile.paper_profile(4))
    assert paper["vertices"] > 100


def test_canonical_matchings(gh, yes_instance):
    M_def = default_matching(gh)
    assert is_semi_default(gh.registry, M_def)
    (A,) = gh.foralls
    (ladder,) = A.of_kind(GadgetKind.LADDER)
    assert classify_state(ladder, M_def).label is StateLabel.DEFAULT

    top = pattern_matching(gh, yes_instance.pattern(["e"]))
    bottom = pattern_matching(gh, yes_instance.pattern(["ebar"]))
    assert classify_state(ladder, top).label is StateLabel.TOP_OPEN
    assert classify_state(ladder, bottom).label is StateLabel.BOTTOM_OPEN
    for tower in gh.registry.towers():
        assert classify_state(tower, top).label is StateLabel.LOCKED
        assert classify_state(tower, M_def).label is StateLabel.DEFAULT


def test_projection_of_canonical_matchings_is_empty(gh, yes_instance):
    M_def = default_matching(gh)
    same, seq = semi_default_projection(gh, M_def)
    assert same == M_def and len(seq) == 0
    M_P = pattern_matching(gh, yes_instance.pattern(["ebar"]))
    kept, seq = semi_default_projection(gh, M_P)
    assert kept == M_P and len(seq) == 0


def test_projection_of_random_matchings(gh, rng):
    M_def = default_matching(gh)
    for _ in range(3):
        M = random_flip_walk(M_def, 6, rng)
        M_prime, seq = semi_default_projection(gh, M)
        assert len(seq) <= len(gh.v_s)
        assert is_semi_default(gh.registry, M_prime)
        assert validate_flip_sequence(seq).final == M_prime


@pytest.mark.slow
def test_projection_of_many_random_matchings(gh):
    rnd = random.Random(23)
    M_def = default_matching(gh)
    for trial in range(100):
        M = random_flip_walk(M_def, rnd.randint(1, 12), rnd)
        M_prime, seq = semi_default_projection(gh, M)
        assert len(seq) <= len(gh.v_s), trial
        assert is_semi_default(gh.registry, M_prime), trial
        assert validate_flip_sequence(seq).final == M_prime


@pytest.mark.parametrize("start", ["e", "ebar"])
def test_synthesis_on_yes_instance(gh, yes_instance, desk_profile, start):
    M1 = pattern_matching(gh, yes_instance.pattern([start]))
    M2 = default_matching(gh)
    result = synthesize_flip_sequence(gh, M1, M2, oracle_provider(yes_instance))
    assert len(result.sequence) == 2 * desk_profile.h_c
    assert result.final == M2
    check = validate_flip_sequence(result.sequence)
    assert check.ok and check.final == M2
    assert result.demand["A1"] == ("tttt" if start == "e" else "bbbb")
    expected = "{e1}" if start == "e" else "{~e1}"
    assert [str(p) for p in result.patterns] == [expected, expected]

    census = regularity_census(gh.graph, gh.registry, result.sequence, locked_to_default=True)
    assert (census.regular, census.irregular) == (4, 0)
    assert census.flagged == []

    for s, cycle in enumerate(result.sequence.cycles):
        order, pattern = extract_ham_cycle(gh, cycle)
        assert order == result.routes[s // 2]
        assert pattern == result.patterns[s // 2]


def test_synthesis_between_default_matchings(gh, yes_instance):
    M_def = default_matching(gh)
    result = synthesize_flip_sequence(gh, M_def, M_def, oracle_provider(yes_instance))
    assert len(result.sequence) == 4
    assert result.final == M_def


def test_synthesis_fails_on_refuted_pattern(no_instance, desk_profile):
    gh = build_GH(no_instance, desk_profile)
    M1 = pattern_matching(gh, no_instance.pattern(["ebar"]))
    with pytest.raises(HamProviderFailed) as info:
        synthesize_flip_sequence(gh, M1, default_matching(gh), oracle_provider(no_instance))
    assert str(info.value.pattern) == "{~e1}"


@pytest.mark.parametrize(
    "n, k, seed",
    [(4, 1, 0), (5, 1, 1), (6, 1, 2), (6, 2, 3), (7, 2, 4)],
)
def test_synthesis_round_trip_on_yes_instances(n, k, seed, desk_profile):
    instance = complete_yes_instance(n, k)
    assert forall_exists_decision(instance).verdict
    gh = build_GH(instance, desk_profile)
    rnd = random.Random(seed)
    start = instance.pattern([rnd.random() < 0.5 for _ in range(k)])
    M1 = pattern_matching(gh, start)
    M2 = default_matching(gh)

    result = synthesize_flip_sequence(gh, M1, M2, oracle_provider(instance))
    assert len(result.sequence) == 2 * desk_profile.h_c
    check = validate_flip_sequence(result.sequence)
    assert check.ok and check.final == M2
    assert result.patterns == [start] * desk_profile.h_c
    assert sorted(result.demand.values()) == sorted("bbbb" if bar else "tttt" for bar in start.choices)

    census = regularity_census(gh.graph, gh.registry, result.sequence, locked_to_default=True)
    assert census.irregular == 0
    for s, cycle in enumerate(result.sequence.cycles):
        order, pattern = extract_ham_cycle(gh, cycle)
        assert order == result.routes[s // 2]
        assert pattern == start


@pytest.mark.parametrize("n, k", [(4, 1), (5, 1), (6, 2)])
def test_synthesis_stops_at_the_refuting_pattern(n, k, desk_profile):
    instance = complete_no_instance(n, k)
    refuting = forall_exists_decision(instance).refuting
    assert refuting is not None
    gh = build_GH(instance, desk_profile)
    M1 = pattern_matching(gh, refuting)
    with pytest.raises(HamProviderFailed) as info:
        synthesize_flip_sequence(gh, M1, default_matching(gh), oracle_provider(instance))
    assert info.value.pattern == refuting


def test_synthesis_needs_matching_profile(yes_instance):
    gh = build_GH(yes_instance, ScaleProfile.parse("3,1,1"))
    M_def = default_matching(gh)
    with pytest.raises(ProfileMismatch):
        synthesize_flip_sequence(gh, M_def, M_def, oracle_provider(yes_instance))


def test_extraction_rejects_irregular_cycles(gh):
    (tower,) = gh.vertex_cities[0].children
    from matchinglab.GadgetLib import role_edge

    h = tower.params["h"]
    square = [
        role_edge(gh.graph, tower, *pair)
        for pair in ((f"a_{h}", f"a_{h - 1}"), (f"a_{h - 1}", f"b_{h - 1}"), (f"b_{h - 1}", f"b_{h}"), (f"a_{h}", f"b_{h}"))
    ]
    with pytest.raises(NotRegular):
        extract_ham_cycle(gh, square)


def test_semi_default_density(yes_instance, desk_profile):
    verdict = check_semi_default_density(yes_instance, desk_profile, trials=3, rng=random.Random(5))
    assert verdict.ok
    assert verdict.measurements["longest"] <= verdict.measurements["bound"] == 26


@pytest.mark.slow
@pytest.mark.parametrize("name", ["yes-6-2", "random-7-2"])
def test_semi_default_density_hundred_trials(name, desk_profile):
    instance = DESK_INSTANCES[name]()
    verdict = check_semi_default_density(instance, desk_profile, trials=100, rng=random.Random(31))
    assert verdict.ok, verdict.counterexample
    assert verdict.checked == 100
    assert verdict.measurements["longest"] <= instance.n + 22 * instance.k


def test_folklore_small_formulas(single_clause, contradiction):
    fc = build_folklore_hc(single_clause)
    census = fc.census()
    assert census["vertices"] == census["formula_count"] == 30
    assert census["bound_holds"]
    assert ham_cycle(fc.graph, "undirected") is not None
    assert ham_cycle(build_folklore_hc(contradiction).graph, "undirected") is None


@pytest.mark.slow
def test_folklore_agrees_with_brute_force():
    rnd = random.Random(19)
    for _ in range(24):
        phi = random_cnf(rnd.randint(1, 4), rnd.randint(1, 5), rnd)
        fc = build_folklore_hc(phi)
        census = fc.census()
        assert census["vertices"] == census["formula_count"]
        # the 60m + 3 bound only covers formulas with many clauses per variable
        assert census["bound_holds"] == (census["vertices"] <= 60 * phi.num_clauses + 3)
        hamiltonian = ham_cycle(fc.graph, "undirected") is not None
        assert hamiltonian == cnf_brute_force(phi).satisfiable, phi.to_dimacs()


def test_folklore_census_counts_xors():
    phi = CnfFormula(2, ((1, -2), (2,)))
    fc = build_folklore_hc(phi)
    assert len(fc.xors) == phi.num_vars + phi.num_literals
    assert fc.census()["literals"] == 3


@pytest.fixture
def small_profile():
    return ScaleProfile(h_c=2, t_c=1, t=1)


def test_inapprox_on_four_cycle(small_profile):
    H = cycle_graph(4)
    ic = build_inapprox_G(H, small_profile)
    census = ic.census()
    assert census["cities"] == 4
    assert census["crossing_edges"] == 8
    M1, M2 = inapprox_matchings(ic)
    seq = synthesize_inapprox_sequence(ic, M1, M2, [0, 1, 2, 3])
    assert len(seq) == 4
    for cycle in seq.cycles:
        walk, w1 = extract_walk(ic, cycle)
        assert w1 == 4
        assert sorted(walk.walk) == [0, 1, 2, 3]


def test_inapprox_on_triangle(small_profile):
    ic = build_inapprox_G(cycle_graph(3), small_profile)
    assert ic.census()["crossing_edges"] == 6
    assert is_bipartite_certificate(ic.graph).ok


def test_inapprox_projection(small_profile, rng):
    ic = build_inapprox_G(cycle_graph(4), small_profile)
    M1, _ = inapprox_matchings(ic)
    M, seq = inapprox_projection(ic, random_flip_walk(M1, 5, rng))
    assert len(seq) <= 4
    assert is_semi_default(ic.registry, M)


def test_check_inapprox(small_profile):
    verdict = check_inapprox(cycle_graph(4), small_profile, rng=random.Random(2))
    assert verdict.ok
    assert verdict.measurements["min_w1"] == 4


def test_epsilon_constants():
    consts = epsilon_constants()
    assert consts.eps1 == Fraction(1, 19)
    assert consts.d == 13
    assert consts.eps2 == Fraction(1, 16226)
    assert consts.to_json()["eps_limit"] == "1/16225"
