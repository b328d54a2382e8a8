#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
The end-to-end compilations and the flip sequences built on top of them.

forall-exists Hamiltonian cycle -> G_H
    every vertex x of H becomes x_in (Left) and x_out (Right) joined by a
    city; undesignated arcs (x, y) become edges x_out y_in; every designated
    pair (e_j, ebar_j) leaving v_j becomes a forall gadget A_j on
    (v_j out, u_j in, w_j in).

3SAT -> folklore Hamiltonian-cycle graph H(phi) (undirected, not bipartite)

undirected H -> G for the inapproximability argument
    cities v_in -> v_out plus the two crossing edges a_out b_in, b_out a_in
    for every edge ab of H.

Scale is a ScaleProfile. Building refuses graphs above ``vertex_limit``
vertices; census_GH computes the same totals in closed form at any scale.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .GadgetLib import (
    GadgetHandle,
    GadgetKind,
    GadgetRegistry,
    Harness,
    LemmaVerdict,
    LADDER_BOTTOM_OPEN,
    LADDER_TOP_OPEN,
    RolePair,
    add_city,
    add_forall,
    classify_state,
    forall_chain,
    gadget_edges,
    is_regular,
    ladder_state_pairs,
    ladder_transfer_graph,
    ladder_transfer_moves,
    role_edge,
    tower_edge_roles,
    tower_harness,
    tower_state_pairs,
    tower_transfer_sequence,
    StateLabel,
)
from .GraphCore import BipartiteGraph, DirectedGraph, GadgetRecord, GraphBuilder, RoleTag, Side, UndirectedGraph
from .Instances import CnfFormula, HamInstance, Pattern, ScaleProfile
from .LabErrors import (
    HamProviderFailed,
    InfeasibleScale,
    InvariantViolation,
    NotHamiltonian,
    NotRegular,
    PatternInvalid,
    ProfileInvalid,
    StateNotSemiDefault,
)
from .MatchingEngine import (
    Cycle,
    FlipSequence,
    PerfectMatching,
    decompose_symmetric_difference,
    random_flip_walk,
    require_cycle,
    validate_flip_sequence,
)
from .OracleSuite import WalkRecord, eps_good_check, ham_cycle

log = logging.getLogger(__name__)

DEFAULT_VERTEX_LIMIT = 2_000_000

HamProvider = Callable[[Pattern], Optional[Sequence[int]]]


# -- G_H -----------------------------------------------------------------------
@dataclass
class GHConstruction:
    graph: BipartiteGraph
    registry: GadgetRegistry
    instance: HamInstance
    profile: ScaleProfile
    vertex_cities: List[GadgetHandle]
    foralls: List[GadgetHandle]
    in_vertex: List[int]
    out_vertex: List[int]
    arc_edges: Dict[int, int]
    v_s: FrozenSet[int]

    def census(self) -> Dict[str, int]:
        counts = self.registry.census()
        return {
            "cities": counts["city"],
            "towers": counts["tower"],
            "xors": counts["xor"],
            "foralls": counts["forall"],
            "ladders": counts["ladder"],
            "v_s": len(self.v_s),
            "vertices": self.graph.num_vertices,
            "edges": self.graph.num_edges,
        }


def census_GH(instance: HamInstance, profile: ScaleProfile) -> Dict[str, int]:
    """Closed-form totals of G_H; exact at every scale, cheap at paper scale."""
    n, k, arcs = instance.n, instance.k, instance.graph.num_arcs
    t, t_c, h_c = profile.t, profile.t_c, profile.h_c
    cities = n + 16 * k
    return {
        "cities": cities,
        "towers": cities * t_c,
        "xors": 3 * k,
        "foralls": k,
        "ladders": k * t,
        "v_s": n + 22 * k,
        "vertices": 2 * n + cities * t_c * (2 * h_c + 2) + k * (34 + 10 * t),
        "edges": cities * (t_c * (3 * h_c + 2) + 1) + (arcs - 2 * k) + k * (35 + 17 * t),
    }


def build_GH(
    instance: HamInstance,
    profile: ScaleProfile,
    vertex_limit: Optional[int] = DEFAULT_VERTEX_LIMIT,
) -> GHConstruction:
    expected = census_GH(instance, profile)
    if vertex_limit is not None and expected["vertices"] > vertex_limit:
        raise InfeasibleScale(
            f"G_H would have {expected['vertices']} vertices (limit {vertex_limit}); use census_GH instead",
            expected["vertices"],
        )
    H = instance.graph
    b = GraphBuilder()
    reg = GadgetRegistry()
    in_v = [b.add_vertex(f"{H.labels[x]}_in", Side.LEFT) for x in range(H.num_vertices)]
    out_v = [b.add_vertex(f"{H.labels[x]}_out", Side.RIGHT) for x in range(H.num_vertices)]
    t_c, h_c = profile.city_scale
    cities = [reg.add(add_city(b, f"V{x}", in_v[x], out_v[x], t_c, h_c)) for x in range(H.num_vertices)]

    designated = instance.designated_arcs
    arc_order: List[int] = []
    for a, (x, y) in enumerate(H.arcs):
        if a not in designated:
            b.add_edge(out_v[x], in_v[y])
            arc_order.append(a)

    foralls = []
    for j in range(instance.k):
        v, u, w = instance.designated(j)
        foralls.append(
            reg.add(add_forall(b, reg, f"A{j + 1}", out_v[v], in_v[u], in_v[w], profile.t, profile.city_scale))
        )
    G = b.build()
    arc_edges = {a: G.edge_index(out_v[H.arcs[a][0]], in_v[H.arcs[a][1]]) for a in arc_order}

    v_s: Set[int] = set(in_v)
    for xor in reg.of_kind(GadgetKind.XOR):
        v_s.update(xor.roles[f"p_{i}"] for i in range(1, 5))
    for A in foralls:
        v_s.update(A.roles[f"x_{i}"] for i in range(1, 11))

    gh = GHConstruction(G, reg, instance, profile, cities, foralls, in_v, out_v, arc_edges, frozenset(v_s))
    built = gh.census()
    for key in ("cities", "xors", "foralls", "ladders", "v_s", "vertices", "edges"):
        if built[key] != expected[key]:
            raise InvariantViolation(f"G_H census mismatch on {key}: built {built[key]}, expected {expected[key]}")
    log.info("built G_H: %d vertices, %d edges, %d cities (profile %s)", G.num_vertices, G.num_edges,
             built["cities"], profile)
    return gh


# -- canonical matchings -------------------------------------------------------
def _tower_edges(G: UndirectedGraph, tower: GadgetHandle, label: StateLabel) -> List[int]:
    return [role_edge(G, tower, r1, r2) for r1, r2 in tower_state_pairs(tower.params["h"], label)]


def _ladder_edges(G: UndirectedGraph, ladder: GadgetHandle, pairs: Iterable[RolePair]) -> List[int]:
    return [role_edge(G, ladder, r1, r2) for r1, r2 in pairs]


def _canonical_matching(
    G: UndirectedGraph,
    registry: GadgetRegistry,
    tower_label: StateLabel,
    ladder_pairs: Callable[[GadgetHandle, GadgetHandle], Iterable[RolePair]],
) -> PerfectMatching:
    edges: Set[int] = set()
    for tower in registry.towers():
        edges.update(_tower_edges(G, tower, tower_label))
    for top in registry.top:
        if top.kind is GadgetKind.FORALL:
            edges.add(role_edge(G, top, "x_9", "x_10"))
            for ladder in top.of_kind(GadgetKind.LADDER):
                edges.update(_ladder_edges(G, ladder, ladder_pairs(top, ladder)))
    return PerfectMatching.of(G, edges)


def default_matching(gh: GHConstruction) -> PerfectMatching:
    """Every tower default, x_9 x_10 matched, every ladder default."""
    default = ladder_state_pairs(range(1, 6))
    return _canonical_matching(gh.graph, gh.registry, StateLabel.DEFAULT, lambda A, L: default)


def pattern_matching(gh: GHConstruction, pattern: Pattern) -> PerfectMatching:
    """Every tower locked; the ladders of A_j top-open for e_j in P, bottom-open for ebar_j."""
    if len(pattern.choices) != gh.instance.k:
        raise PatternInvalid(f"pattern has {len(pattern.choices)} choices for {gh.instance.k} pairs")
    if gh.profile.h_c < 2:
        raise ProfileInvalid("locked towers need city height h_c >= 2")
    by_name = {A.name: bar for A, bar in zip(gh.foralls, pattern.choices)}
    return _canonical_matching(
        gh.graph,
        gh.registry,
        StateLabel.LOCKED,
        lambda A, L: LADDER_BOTTOM_OPEN if by_name[A.name] else LADDER_TOP_OPEN,
    )


def is_semi_default(registry: GadgetRegistry, M: PerfectMatching) -> bool:
    """Every city, XOR and forall gadget in semi-default state."""
    for h in registry.all():
        if h.kind in (GadgetKind.CITY, GadgetKind.XOR, GadgetKind.FORALL):
            if not classify_state(h, M).semi_default:
                return False
    return True


def _project(M: PerfectMatching, M_def: PerfectMatching, v_s: FrozenSet[int]) -> Tuple[PerfectMatching, FlipSequence]:
    G = M.graph
    touching = []
    for cycle in decompose_symmetric_difference(M, M_def):
        if any(x in v_s for e in cycle for x in G.edges[e]):
            touching.append(cycle)
    seq = FlipSequence(M, tuple(touching))
    result = validate_flip_sequence(seq)
    if not result.ok:
        raise InvariantViolation(f"projection failed to validate: {result.detail}")
    return result.final, seq  # type: ignore[return-value]


def semi_default_projection(gh: GHConstruction, M: PerfectMatching) -> Tuple[PerfectMatching, FlipSequence]:
    """Flip the cycles of M xor M_def that touch V_s; the result is semi-default."""
    M_prime, seq = _project(M, default_matching(gh), gh.v_s)
    if not is_semi_default(gh.registry, M_prime):
        raise InvariantViolation("projection did not reach a semi-default matching")
    log.debug("semi-default projection: %d flips (|V_s| = %d)", len(seq), len(gh.v_s))
    return M_prime, seq


# -- gadget plans --------------------------------------------------------------
class TowerPlanner:
    """Well-behaved tower sequences of length 2h mapped into a host graph.

    Plans are computed once per (height, start state, goal state) in a tower
    harness and reused for every tower with the same states.
    """

    def __init__(self) -> None:
        self._harness: Dict[int, Harness] = {}
        self._plans: Dict[Tuple[int, Tuple[RolePair, ...], Tuple[RolePair, ...]], Tuple[Tuple[RolePair, ...], ...]] = {}

    @staticmethod
    def state_pairs(G: UndirectedGraph, tower: GadgetHandle, M: PerfectMatching) -> Tuple[RolePair, ...]:
        if not classify_state(tower, M).semi_default:
            raise StateNotSemiDefault(f"tower {tower.name} is not semi-default")
        m = M.edge_set
        return tuple(p for p in tower_edge_roles(tower.params["h"]) if role_edge(G, tower, *p) in m)

    def plan(self, tower: GadgetHandle, start: PerfectMatching, goal: PerfectMatching) -> List[Cycle]:
        G = start.graph
        h = tower.params["h"]
        key = (h, self.state_pairs(G, tower, start), self.state_pairs(G, tower, goal))
        if key not in self._plans:
            harness = self._harness.get(h)
            if harness is None:
                harness = self._harness[h] = tower_harness(h)
            seq = tower_transfer_sequence(harness, harness.matching(key[1]), harness.matching(key[2]))
            self._plans[key] = tuple(tuple(harness.role_pairs(c)) for c in seq.cycles)
        return [frozenset(role_edge(G, tower, *p) for p in pairs) for pairs in self._plans[key]]

    @property
    def cached(self) -> int:
        return len(self._plans)


def ladder_plan(
    G: UndirectedGraph, ladder: GadgetHandle, start: PerfectMatching, goal: PerfectMatching
) -> List[Tuple[str, Cycle]]:
    """Four (direction, ladder path edges) moves taking the ladder from start to goal."""
    s1, s2 = classify_state(ladder, start), classify_state(ladder, goal)
    harness = ladder_transfer_graph().harness
    out = []
    for d, cycle in ladder_transfer_moves(s1, s2):
        out.append((d, frozenset(role_edge(G, ladder, *p) for p in harness.role_pairs(cycle))))
    return out


# -- synthesis -----------------------------------------------------------------
@dataclass
class SynthesisResult:
    sequence: FlipSequence
    patterns: List[Pattern]
    routes: List[List[int]]
    demand: Dict[str, str]
    final: PerfectMatching

    def to_json(self) -> dict:
        return {
            "length": len(self.sequence),
            "patterns": [str(p) for p in self.patterns],
            "routes": self.routes,
            "demand": dict(self.demand),
        }


def check_ham_route(H: DirectedGraph, order: Sequence[int]) -> Optional[str]:
    """None when ``order`` is a Hamiltonian cycle of H, otherwise the reason."""
    n = H.num_vertices
    if sorted(order) != list(range(n)):
        return "route does not list every vertex exactly once"
    for i, x in enumerate(order):
        y = order[(i + 1) % n]
        if H.find_arc(x, y) is None:
            return f"route uses the missing arc {x}->{y}"
    return None


def _route(
    gh: GHConstruction, order: Sequence[int], pattern: Pattern
) -> Tuple[Set[int], List[GadgetHandle], Dict[str, bool]]:
    """Plain edges, cities and forall directions of one Hamiltonian route in G_H."""
    H = gh.instance.graph
    G, reg = gh.graph, gh.registry
    pair_of = {}
    for j, (e, ebar) in enumerate(gh.instance.pairs):
        pair_of[e] = (j, False)
        pair_of[ebar] = (j, True)
    plain: Set[int] = set()
    cities: List[GadgetHandle] = []
    top: Dict[str, bool] = {}
    n = len(order)
    for i, x in enumerate(order):
        y = order[(i + 1) % n]
        cities.append(gh.vertex_cities[x])
        a = H.arc_index(x, y)
        if a not in pair_of:
            plain.add(gh.arc_edges[a])
            continue
        j, bar = pair_of[a]
        if pattern.choices[j] != bar:
            raise HamProviderFailed(pattern, f"route leaves v_{j + 1} by the arc the pattern excludes")
        A = gh.foralls[j]
        top[A.name] = not bar
        for seg in forall_chain(A, top=not bar):
            if seg[0] == "city":
                cities.append(seg[1])
            elif seg[0] == "pair":
                edges, inner = reg.traverse(G, seg[1], seg[2])
                plain.update(edges)
                cities.extend(inner)
    return plain, cities, top


def synthesize_flip_sequence(
    gh: GHConstruction,
    M1: PerfectMatching,
    M2: PerfectMatching,
    ham_provider: HamProvider,
) -> SynthesisResult:
    """Exactly 2 h_c regular cycles transforming semi-default M1 into semi-default M2.

    Step pair p reads the characters 2p, 2p+1 of every demand string; they
    fix the pattern, ham_provider routes it, and both cycles of the pair
    follow that route while towers and the demanded ladder take their
    next planned path.
    """
    profile = gh.profile
    profile.require_synthesis()
    G, reg = gh.graph, gh.registry
    for label, M in (("start", M1), ("goal", M2)):
        if not is_semi_default(reg, M):
            raise StateNotSemiDefault(f"{label} matching is not semi-default")
    steps = 2 * profile.h_c

    planner = TowerPlanner()
    tower_paths: Dict[str, List[Cycle]] = {}
    for city in reg.cities():
        for tower in city.children:
            tower_paths[tower.name] = planner.plan(tower, M1, M2)

    demand: Dict[str, str] = {}
    ladder_moves: Dict[str, List[List[Tuple[str, Cycle]]]] = {}
    for A in gh.foralls:
        moves = [ladder_plan(G, L, M1, M2) for L in A.of_kind(GadgetKind.LADDER)]
        ladder_moves[A.name] = moves
        demand[A.name] = "".join(d for plan in moves for d, _ in plan)
        if len(demand[A.name]) != steps:
            raise InvariantViolation(f"demand string of {A.name} has length {len(demand[A.name])}, expected {steps}")
    log.debug("synthesis: %d tower plans cached, demand %s", planner.cached, demand)

    all_cities = {c.name for c in reg.cities()}
    cycles: List[Cycle] = []
    patterns: List[Pattern] = []
    routes: List[List[int]] = []
    running = M1
    for p in range(profile.h_c):
        choices = []
        for A in gh.foralls:
            pair = demand[A.name][2 * p:2 * p + 2]
            if pair not in ("tt", "bb"):
                raise InvariantViolation(f"{A.name}: demand pair {pair!r} at step pair {p}")
            choices.append(pair == "bb")
        pattern = gh.instance.pattern(choices)
        order = ham_provider(pattern)
        if order is None:
            raise HamProviderFailed(pattern, "no Hamiltonian cycle respects this pattern")
        order = list(order)
        problem = check_ham_route(gh.instance.graph, order)
        if problem:
            raise HamProviderFailed(pattern, problem)
        plain, cities, _ = _route(gh, order, pattern)
        if {c.name for c in cities} != all_cities or len(cities) != len(all_cities):
            raise InvariantViolation(f"route for {pattern} does not visit every city exactly once")
        patterns.append(pattern)
        routes.append(order)
        for q in (0, 1):
            s = 2 * p + q
            edges = set(plain)
            for city in cities:
                for tower in city.children:
                    edges |= tower_paths[tower.name][s]
            for A in gh.foralls:
                _, ladder_edges = ladder_moves[A.name][p // 2][2 * (p % 2) + q]
                edges |= ladder_edges
            cycle = frozenset(edges)
            if not is_regular(G, reg, cycle):
                raise InvariantViolation(f"synthesized cycle {s} is not regular")
            running = running.flip(cycle)
            cycles.append(cycle)
        if not is_semi_default(reg, running):
            raise InvariantViolation(f"matching after step pair {p} is not semi-default")

    seq = FlipSequence(M1, tuple(cycles))
    check = validate_flip_sequence(seq)
    if not check.ok:
        raise InvariantViolation(f"synthesized sequence invalid: {check.detail}")
    if check.final != M2:
        raise InvariantViolation("synthesized sequence does not end at the goal matching")
    log.info("synthesized %d regular cycles over %d patterns", len(seq), len(patterns))
    return SynthesisResult(seq, patterns, routes, demand, check.final)  # type: ignore[arg-type]


# -- extraction ----------------------------------------------------------------
def extract_ham_cycle(gh: GHConstruction, C: Iterable[int]) -> Tuple[List[int], Pattern]:
    """Hamiltonian cycle of H (vertex order from 0) and pattern traced by a regular cycle."""
    G, reg = gh.graph, gh.registry
    cycle = frozenset(C)
    require_cycle(G, cycle)
    if not is_regular(G, reg, cycle):
        raise NotRegular("cycle misses at least one city")
    in_of = {v: x for x, v in enumerate(gh.in_vertex)}
    forall_of = {gh.instance.designated(j)[0]: j for j in range(gh.instance.k)}
    n = gh.instance.n
    succ: Dict[int, int] = {}
    choices: Dict[int, bool] = {}
    for x in range(n):
        out = gh.out_vertex[x]
        inside = gadget_edges(G, gh.vertex_cities[x])
        leaving = [e for e in G.incident(out) if e in cycle and e not in inside]
        if len(leaving) != 1:
            raise NotRegular(f"cycle leaves {G.vertices[out].id} by {len(leaving)} outside edges")
        nxt = G.other(leaving[0], out)
        if nxt in in_of:
            succ[x] = in_of[nxt]
            continue
        j = forall_of.get(x)
        if j is None:
            raise NotRegular(f"cycle leaves {G.vertices[out].id} into a foreign gadget")
        A = gh.foralls[j]
        r = A.roles
        top = reg.uses(G, cycle, r["x_10"], r["u_in"])
        bottom = reg.uses(G, cycle, r["x_10"], r["w_in"])
        if top == bottom:
            raise NotRegular(f"{A.name} is traversed in neither or both states")
        _, u, w = gh.instance.designated(j)
        succ[x] = u if top else w
        choices[j] = not top
    order = [0]
    while len(order) < n:
        nxt = succ[order[-1]]
        if nxt in order:
            raise NotRegular("cycle closes before visiting every vertex of H")
        order.append(nxt)
    if succ[order[-1]] != 0:
        raise NotRegular("cycle does not return to its first vertex")
    pattern = gh.instance.pattern([choices[j] for j in range(gh.instance.k)])
    return order, pattern


@dataclass
class RegularityCensus:
    regular: int
    irregular: int
    per_cycle: List[bool]
    city_visits: Dict[str, int]
    flagged: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "regular": self.regular,
            "irregular": self.irregular,
            "min_city_visits": min(self.city_visits.values(), default=0),
            "flagged": list(self.flagged),
        }


def regularity_census(
    G: UndirectedGraph,
    registry: GadgetRegistry,
    seq: FlipSequence,
    locked_to_default: bool = False,
) -> RegularityCensus:
    """Regular/irregular counts and per-city visit counts of a flip sequence.

    With ``locked_to_default`` every city visited fewer than 2h - 2 times is
    flagged (a sequence turning locked towers default must visit each city
    at least that often).
    """
    entries = {c.name: role_edge(G, c.children[0], "v", "a_0") for c in registry.cities()}
    visits = Counter({name: 0 for name in entries})
    per_cycle = []
    for cycle in seq.cycles:
        per_cycle.append(all(e in cycle for e in entries.values()))
        for name, e in entries.items():
            if e in cycle:
                visits[name] += 1
    flagged = []
    if locked_to_default:
        for city in registry.cities():
            need = 2 * city.params["h_c"] - 2
            if visits[city.name] < need:
                flagged.append(city.name)
    regular = sum(per_cycle)
    return RegularityCensus(regular, len(per_cycle) - regular, per_cycle, dict(visits), flagged)


# -- folklore 3SAT -> Hamiltonian cycle ----------------------------------------
@dataclass
class FolkloreConstruction:
    graph: UndirectedGraph
    formula: CnfFormula
    xors: List[Dict[str, int]]
    clause_vertices: List[List[int]]
    literal_edges: Dict[str, Tuple[int, int]]

    def census(self) -> Dict[str, object]:
        m, k, L = self.formula.num_clauses, self.formula.num_vars, self.formula.num_literals
        n = self.graph.num_vertices
        return {
            "vertices": n,
            "edges": self.graph.num_edges,
            "xors": len(self.xors),
            "clauses": m,
            "variables": k,
            "literals": L,
            "formula_count": 3 + 2 * k + L + 12 * (k + L),
            "bound": 60 * m + 3,
            "bound_holds": n <= 60 * m + 3,
        }


# the twelve XOR vertices: y_1..y_4 subdivide ab, y_9..y_12 subdivide a'b',
# y_5..y_8 sit on the rungs y_i y_{i+4} y_{i+8}
_FOLK_MIDDLE = {"A": ("y_2", "y_3"), "B": ("y_10", "y_11")}


def build_folklore_hc(formula: CnfFormula) -> FolkloreConstruction:
    """Undirected graph H(phi), Hamiltonian exactly when phi is satisfiable."""
    b = GraphBuilder()
    v1 = b.add_vertex("v1", None, [RoleTag("H", "v_1")])
    v2 = b.add_vertex("v2", None, [RoleTag("H", "v_2")])
    v3 = b.add_vertex("v3", None, [RoleTag("H", "v_3")])
    k = formula.num_vars
    z = [b.add_vertex(f"z{i}", None, [RoleTag("H", f"z_{i}")]) for i in range(1, 2 * k + 1)]

    # logical edges are keyed by name while virtual, by vertex pair once physical
    ends: Dict[object, Tuple[int, int]] = {}
    logical: Dict[object, Tuple[int, str]] = {}
    xors: List[Dict[str, int]] = []

    def resolve(key: object) -> Tuple[object, int, int, bool]:
        while key in logical:
            idx, side = logical[key]
            mid = _FOLK_MIDDLE[side]
            key = frozenset((xors[idx][mid[0]], xors[idx][mid[1]]))
            ends[key] = (xors[idx][mid[0]], xors[idx][mid[1]])
        u, v = ends[key]
        return key, u, v, isinstance(key, frozenset)

    def xor(key_a: object, key_b: object) -> None:
        ka, a, bb, phys_a = resolve(key_a)
        kb, a2, b2, phys_b = resolve(key_b)
        name = f"X{len(xors) + 1}"
        if phys_a:
            b.remove_edge(a, bb)
        if phys_b:
            b.remove_edge(a2, b2)
        roles = {"a": a, "b": bb, "a'": a2, "b'": b2}
        for i in range(1, 13):
            roles[f"y_{i}"] = b.add_vertex(b.fresh_id(f"{name}.y{i}"), None, [RoleTag(name, f"y_{i}")])
        y = roles
        b.add_path(a, y["y_1"], y["y_2"], y["y_3"], y["y_4"], bb)
        b.add_path(a2, y["y_9"], y["y_10"], y["y_11"], y["y_12"], b2)
        for i in range(1, 5):
            b.add_path(y[f"y_{i}"], y[f"y_{i + 4}"], y[f"y_{i + 8}"])
        b.register(GadgetRecord(name, "hc_xor", {}, dict(roles)))
        logical[ka] = (len(xors), "A")
        logical[kb] = (len(xors), "B")
        xors.append(roles)

    literal_edges: Dict[str, Tuple[int, int]] = {}
    for i in range(1, k + 1):
        pos, neg = f"e{i}", f"~e{i}"
        ends[pos] = ends[neg] = (z[2 * i - 2], z[2 * i - 1])
        literal_edges[pos] = literal_edges[neg] = ends[pos]
        xor(pos, neg)

    clause_vertices: List[List[int]] = []
    for j, clause in enumerate(formula.clauses, start=1):
        us = [b.add_vertex(f"c{j}u{i}", None, [RoleTag(f"C{j}", f"u_{i}")]) for i in range(1, len(clause) + 1)]
        clause_vertices.append(us)
        for i, lit in enumerate(clause):
            key = f"c{j}.{i + 1}"
            ends[key] = (us[i], us[(i + 1) % len(us)])
            xor(key, f"e{abs(lit)}" if lit > 0 else f"~e{abs(lit)}")

    if k:
        b.add_path(v1, v2, z[0])
        b.add_edge(z[-1], v3)
        for i in range(1, k):
            b.add_edge(z[2 * i - 1], z[2 * i])
    else:
        b.add_path(v1, v2, v3)
    clique = [u for us in clause_vertices for u in us] + [v1, v3]
    for i, u in enumerate(clique):
        for w in clique[i + 1:]:
            if not b.has_edge(u, w):
                b.add_edge(u, w)
    G = b.build_undirected()
    fc = FolkloreConstruction(G, formula, xors, clause_vertices, literal_edges)
    log.info("folklore graph: %d vertices, %d edges, %d XORs", G.num_vertices, G.num_edges, len(xors))
    return fc


# -- undirected H -> G (inapproximability) -------------------------------------
@dataclass
class InapproxConstruction:
    graph: BipartiteGraph
    registry: GadgetRegistry
    source: UndirectedGraph
    profile: ScaleProfile
    cities: List[GadgetHandle]
    in_vertex: List[int]
    out_vertex: List[int]
    v_s: FrozenSet[int]

    def census(self) -> Dict[str, int]:
        counts = self.registry.census()
        return {
            "cities": counts["city"],
            "towers": counts["tower"],
            "crossing_edges": 2 * self.source.num_edges,
            "v_s": len(self.v_s),
            "vertices": self.graph.num_vertices,
            "edges": self.graph.num_edges,
        }


def inapprox_profile(n: int) -> ScaleProfile:
    """City height n^2 and width 4n^2 + 4n (t is unused here)."""
    return ScaleProfile(h_c=n * n, t_c=4 * n * n + 4 * n, t=1, paper=True)


def build_inapprox_G(
    H: UndirectedGraph, profile: ScaleProfile, vertex_limit: Optional[int] = DEFAULT_VERTEX_LIMIT
) -> InapproxConstruction:
    n = H.num_vertices
    expected = 2 * n + n * profile.t_c * (2 * profile.h_c + 2)
    if vertex_limit is not None and expected > vertex_limit:
        raise InfeasibleScale(f"G would have {expected} vertices (limit {vertex_limit})", expected)
    b = GraphBuilder()
    reg = GadgetRegistry()
    in_v = [b.add_vertex(f"{H.vertices[x].id}_in", Side.LEFT) for x in range(n)]
    out_v = [b.add_vertex(f"{H.vertices[x].id}_out", Side.RIGHT) for x in range(n)]
    cities = [reg.add(add_city(b, f"V{x}", in_v[x], out_v[x], profile.t_c, profile.h_c)) for x in range(n)]
    for a, c in H.edges:
        b.add_edge(out_v[a], in_v[c])
        b.add_edge(out_v[c], in_v[a])
    G = b.build()
    log.info("inapprox graph: %d vertices, %d cities", G.num_vertices, n)
    return InapproxConstruction(G, reg, H, profile, cities, in_v, out_v, frozenset(in_v))


def inapprox_matchings(ic: InapproxConstruction) -> Tuple[PerfectMatching, PerfectMatching]:
    """(M1, M2): every tower locked, every tower default."""
    G, reg = ic.graph, ic.registry
    if ic.profile.h_c < 2:
        raise ProfileInvalid("locked towers need city height h_c >= 2")
    locked = [e for t in reg.towers() for e in _tower_edges(G, t, StateLabel.LOCKED)]
    default = [e for t in reg.towers() for e in _tower_edges(G, t, StateLabel.DEFAULT)]
    return PerfectMatching.of(G, locked), PerfectMatching.of(G, default)


def inapprox_default(ic: InapproxConstruction) -> PerfectMatching:
    return PerfectMatching.of(ic.graph, [e for t in ic.registry.towers() for e in _tower_edges(ic.graph, t, StateLabel.DEFAULT)])


def inapprox_projection(ic: InapproxConstruction, M: PerfectMatching) -> Tuple[PerfectMatching, FlipSequence]:
    """Semi-default projection with V_s = {v_in}; at most n flips."""
    M_prime, seq = _project(M, inapprox_default(ic), ic.v_s)
    if not is_semi_default(ic.registry, M_prime):
        raise InvariantViolation("projection did not reach a semi-default matching")
    return M_prime, seq


def synthesize_inapprox_sequence(
    ic: InapproxConstruction, M1: PerfectMatching, M2: PerfectMatching, ham_cycle: Sequence[int]
) -> FlipSequence:
    """2 h_c cycles following one Hamiltonian cycle of H through every city."""
    H, G, reg = ic.source, ic.graph, ic.registry
    order = list(ham_cycle)
    n = H.num_vertices
    if sorted(order) != list(range(n)) or n < 3:
        raise NotHamiltonian("route does not list every vertex of H exactly once")
    plain = set()
    for i, a in enumerate(order):
        c = order[(i + 1) % n]
        if not H.has_edge(a, c):
            raise NotHamiltonian(f"route uses the missing edge {a}-{c}")
        plain.add(G.edge_index(ic.out_vertex[a], ic.in_vertex[c]))
    for label, M in (("start", M1), ("goal", M2)):
        if not is_semi_default(reg, M):
            raise StateNotSemiDefault(f"{label} matching is not semi-default")
    planner = TowerPlanner()
    paths = {t.name: planner.plan(t, M1, M2) for t in reg.towers()}
    cycles = []
    for s in range(2 * ic.profile.h_c):
        edges = set(plain)
        for t in reg.towers():
            edges |= paths[t.name][s]
        cycles.append(frozenset(edges))
    seq = FlipSequence(M1, tuple(cycles))
    check = validate_flip_sequence(seq)
    if not check.ok or check.final != M2:
        raise InvariantViolation(f"inapprox sequence invalid: {check.detail}")
    return seq


def extract_walk(ic: InapproxConstruction, C: Iterable[int]) -> Tuple[WalkRecord, int]:
    """Closed walk of H traced by the crossing edges of C, and |W_1|.

    Every crossing edge v_out w_in (in either direction of travel) moves the
    walk from v to w; city traversals keep it in place. C need not be
    alternating for any matching.
    """
    G = ic.graph
    order = require_cycle(G, C)
    owner: Dict[int, int] = {}
    for x, v in enumerate(ic.in_vertex):
        owner[v] = x
    for x, v in enumerate(ic.out_vertex):
        owner[v] = x
    steps: List[int] = []
    m = len(order)
    for i in range(m):
        u, v = order[i], order[(i + 1) % m]
        if u in owner and v in owner and owner[u] != owner[v]:
            steps.append(owner[v])
    walk = WalkRecord(tuple(steps), ic.source)
    return walk, walk.w1_size


# -- constants -----------------------------------------------------------------
@dataclass(frozen=True)
class EpsilonConstants:
    eps1: Fraction
    d: int
    eps2: Fraction
    eps: Fraction

    def to_json(self) -> dict:
        return {"eps1": str(self.eps1), "d": self.d, "eps2": str(self.eps2), "eps": str(self.eps),
                "eps_limit": str(Fraction(1, self.eps2.denominator - 1))}


def epsilon_constants() -> EpsilonConstants:
    """eps1 = 1/19 and d = 13 from bounded-occurrence Max 3SAT; eps2 = eps1 / (61 (d + 1))."""
    eps1 = Fraction(1, 19)
    d = 13
    eps2 = eps1 / (61 * (d + 1))
    return EpsilonConstants(eps1, d, eps2, eps2)


def matching_for_pattern(gh: GHConstruction, choices: Sequence[Union[bool, str]]) -> PerfectMatching:
    return pattern_matching(gh, gh.instance.pattern(choices))


# -- pipeline checks -----------------------------------------------------------
def check_semi_default_density(
    instance: HamInstance, profile: ScaleProfile, trials: int, rng, steps: int = 6
) -> LemmaVerdict:
    """Projecting random matchings of G_H reaches a semi-default one within |V_s| flips."""
    gh = build_GH(instance, profile)
    M_def = default_matching(gh)
    bound = len(gh.v_s)
    violations = 0
    longest = 0
    counterexample = None
    for trial in range(trials):
        M = random_flip_walk(M_def, steps, rng)
        try:
            M_prime, seq = semi_default_projection(gh, M)
        except InvariantViolation as exc:
            violations += 1
            counterexample = counterexample or {"trial": trial, "error": str(exc)}
            continue
        longest = max(longest, len(seq))
        if len(seq) > bound:
            violations += 1
            counterexample = counterexample or {"trial": trial, "length": len(seq)}
    return LemmaVerdict(
        "semi-default",
        violations == 0,
        checked=trials,
        violations=violations,
        measurements={"n": instance.n, "k": instance.k, "bound": bound, "longest": longest, "steps": steps},
        counterexample=counterexample,
    )


def check_inapprox(H: UndirectedGraph, profile: ScaleProfile, rng=None) -> LemmaVerdict:
    """Synthesis on G follows one Hamiltonian cycle of H; every cycle extracts to a 0-good walk."""
    ic = build_inapprox_G(H, profile)
    M1, M2 = inapprox_matchings(ic)
    order = ham_cycle(H, "undirected")
    if order is None:
        raise NotHamiltonian(f"{H!r} has no Hamiltonian cycle to follow")
    seq = synthesize_inapprox_sequence(ic, M1, M2, order)
    violations = 0
    counterexample = None
    w1_sizes = []
    for i, cycle in enumerate(seq.cycles):
        walk, w1 = extract_walk(ic, cycle)
        good, _ = eps_good_check(walk, 0)
        w1_sizes.append(w1)
        if not good:
            violations += 1
            counterexample = counterexample or {"cycle": i, "w1": w1}
    projected = 0
    if rng is not None:
        M, _ = inapprox_projection(ic, random_flip_walk(M1, 4, rng))
        projected = int(is_semi_default(ic.registry, M))
        if not projected:
            violations += 1
    consts = epsilon_constants()
    if (consts.eps1, consts.d, consts.eps2) != (Fraction(1, 19), 13, Fraction(1, 16226)):
        violations += 1
    return LemmaVerdict(
        "inapprox",
        violations == 0 and len(seq) == 2 * profile.h_c,
        checked=len(seq),
        violations=violations,
        measurements={
            "n": H.num_vertices,
            "length": len(seq),
            "expected_length": 2 * profile.h_c,
            "min_w1": min(w1_sizes, default=0),
            "constants": consts.to_json(),
            "census": ic.census(),
        },
        counterexample=counterexample,
    )
