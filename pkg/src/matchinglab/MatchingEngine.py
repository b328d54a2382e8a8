#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Perfect matchings of bipartite graphs and the skeleton of their polytope.

Two perfect matchings are adjacent on the polytope exactly when their
symmetric difference is one alternating cycle, so the skeleton is the "flip
graph": vertices are perfect matchings, edges are single-cycle flips. This
module is the brute-force ground truth the gadget and reduction code is
checked against.

Neighbour generation never materialises all matchings. Orient every
unmatched edge Left->Right and every matched edge Right->Left; directed
cycles of that orientation are exactly the alternating cycles, and
networkx.simple_cycles enumerates them.

    enumerate_perfect_matchings   all matchings up to a cap
    decompose_symmetric_difference / is_adjacent
    alternating_cycle_neighbors   streaming neighbour generation
    flip_distance                 BFS distance plus witness
    polytope_diameter             all-pairs eccentricities, optional workers
    validate_flip_sequence        certificate check (reports, never raises)
    random_flip_walk              random matching sampler
"""

from __future__ import annotations

import logging
import random
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import networkx as nx

from .GraphCore import BipartiteGraph, Side, UndirectedGraph
from .LabErrors import (
    BudgetExceeded,
    CapExceeded,
    MatchingMismatch,
    NoPerfectMatching,
    NotACycle,
    NotPerfect,
)

log = logging.getLogger(__name__)

DEFAULT_MATCHING_CAP = 1_000_000
DEFAULT_STATE_BUDGET = 10_000_000

Cycle = FrozenSet[int]


@dataclass(frozen=True)
class PerfectMatching:
    """Sorted edge indices of a perfect matching plus the graph's content hash.

    Equality and hashing use (edges, graph_hash) only; ``graph`` is carried
    along so cycle operations can walk the edges.
    """

    edges: Tuple[int, ...]
    graph_hash: str
    graph: UndirectedGraph = field(compare=False, repr=False, hash=False)

    @classmethod
    def of(cls, G: UndirectedGraph, edges: Iterable[int]) -> "PerfectMatching":
        chosen = tuple(sorted(set(edges)))
        covered = [0] * G.num_vertices
        for e in chosen:
            if not (0 <= e < G.num_edges):
                raise NotPerfect(f"edge index {e} not in the graph")
            u, v = G.edges[e]
            covered[u] += 1
            covered[v] += 1
        bad = [G.vertices[v].id for v, c in enumerate(covered) if c != 1]
        if bad:
            shown = ", ".join(bad[:5]) + (" ..." if len(bad) > 5 else "")
            raise NotPerfect(f"{len(bad)} vertices not covered exactly once: {shown}")
        return cls(chosen, G.content_hash, G)

    @property
    def edge_set(self) -> FrozenSet[int]:
        return frozenset(self.edges)

    def __contains__(self, e: object) -> bool:
        return e in self.edge_set

    def __len__(self) -> int:
        return len(self.edges)

    def mates(self) -> List[int]:
        """mate[v] = the vertex matched to v."""
        mate = [-1] * self.graph.num_vertices
        for e in self.edges:
            u, v = self.graph.edges[e]
            mate[u], mate[v] = v, u
        return mate

    def flip(self, cycle: Iterable[int]) -> "PerfectMatching":
        """M xor C, re-validated."""
        return PerfectMatching.of(self.graph, self.edge_set.symmetric_difference(cycle))

    def to_json(self) -> dict:
        return {"edges": list(self.edges), "graph_hash": self.graph_hash}

    @classmethod
    def from_json(cls, G: UndirectedGraph, data: dict) -> "PerfectMatching":
        if data.get("graph_hash") not in (None, G.content_hash):
            raise MatchingMismatch("matching was saved against a different graph")
        return cls.of(G, data["edges"])


@dataclass(frozen=True)
class AlternatingCycleSet:
    """Vertex-disjoint cycles of M xor N, alternating w.r.t. ``reference``."""

    reference: PerfectMatching
    cycles: Tuple[Cycle, ...]

    def __len__(self) -> int:
        return len(self.cycles)

    def __iter__(self) -> Iterator[Cycle]:
        return iter(self.cycles)


@dataclass(frozen=True)
class FlipSequence:
    start: PerfectMatching
    cycles: Tuple[Cycle, ...] = ()

    def __len__(self) -> int:
        return len(self.cycles)

    def then(self, other: "FlipSequence") -> "FlipSequence":
        return FlipSequence(self.start, self.cycles + other.cycles)

    def to_json(self) -> dict:
        return {"start": self.start.to_json(), "cycles": [sorted(c) for c in self.cycles]}


def _check_same_graph(M: PerfectMatching, N: PerfectMatching) -> None:
    if M.graph_hash != N.graph_hash:
        raise MatchingMismatch(
            f"matchings belong to different graphs ({M.graph_hash[:8]} vs {N.graph_hash[:8]})"
        )


# -- enumeration ---------------------------------------------------------------
def enumerate_perfect_matchings(G: UndirectedGraph, cap: int = DEFAULT_MATCHING_CAP) -> List[PerfectMatching]:
    """All perfect matchings of G in deterministic order.

    Branches on the lowest-index uncovered vertex, trying its incident edges
    in index order. Raises CapExceeded as soon as match number cap + 1 turns up.
    """
    if cap < 1:
        raise CapExceeded(cap, 0, f"matching cap must be >= 1, got {cap}")
    n = G.num_vertices
    if n % 2:
        return []
    covered = [False] * n
    chosen: List[int] = []
    found: List[PerfectMatching] = []
    ghash = G.content_hash

    def dead_end() -> bool:
        # an uncovered vertex whose neighbours are all covered can never be matched
        for v in range(n):
            if not covered[v] and all(covered[G.other(e, v)] for e in G.incident(v)):
                return True
        return False

    def extend(start: int) -> None:
        v = start
        while v < n and covered[v]:
            v += 1
        if v == n:
            found.append(PerfectMatching(tuple(sorted(chosen)), ghash, G))
            if len(found) > cap:
                raise CapExceeded(cap, len(found))
            return
        covered[v] = True
        for e in G.incident(v):
            w = G.other(e, v)
            if covered[w]:
                continue
            covered[w] = True
            chosen.append(e)
            if not dead_end():
                extend(v + 1)
            chosen.pop()
            covered[w] = False
        covered[v] = False

    extend(0)
    log.debug("%r has %d perfect matchings", G, len(found))
    return found


# -- symmetric difference ------------------------------------------------------
def _walk_components(G: UndirectedGraph, edge_set: Set[int]) -> List[Cycle]:
    """Split an edge set in which every vertex has degree 0 or 2 into cycles."""
    at: Dict[int, List[int]] = {}
    for e in edge_set:
        for x in G.edges[e]:
            at.setdefault(x, []).append(e)
    seen: Set[int] = set()
    cycles: List[Cycle] = []
    for first in sorted(edge_set):
        if first in seen:
            continue
        comp: Set[int] = set()
        stack = [first]
        while stack:
            e = stack.pop()
            if e in comp:
                continue
            comp.add(e)
            for x in G.edges[e]:
                stack.extend(f for f in at[x] if f not in comp)
        seen |= comp
        cycles.append(frozenset(comp))
    return cycles


def decompose_symmetric_difference(M: PerfectMatching, N: PerfectMatching) -> AlternatingCycleSet:
    _check_same_graph(M, N)
    diff = set(M.edge_set.symmetric_difference(N.edge_set))
    cycles = _walk_components(M.graph, diff)
    return AlternatingCycleSet(M, tuple(sorted(cycles, key=min)))


def is_adjacent(M: PerfectMatching, N: PerfectMatching) -> bool:
    return len(decompose_symmetric_difference(M, N)) == 1


# -- neighbours ----------------------------------------------------------------
def orientation(M: PerfectMatching) -> Tuple[nx.DiGraph, Dict[Tuple[int, int], int]]:
    """The matching orientation: unmatched edges L->R, matched edges R->L."""
    G = M.graph
    if not isinstance(G, BipartiteGraph):
        raise TypeError("alternating-cycle orientation needs a BipartiteGraph")
    matched = M.edge_set
    digraph = nx.DiGraph()
    digraph.add_nodes_from(range(G.num_vertices))
    arc_edge: Dict[Tuple[int, int], int] = {}
    for e in range(G.num_edges):
        left, right = G.left_end(e), G.right_end(e)
        arc = (right, left) if e in matched else (left, right)
        digraph.add_edge(*arc)
        arc_edge[arc] = e
    return digraph, arc_edge


def neighbor_cycles(M: PerfectMatching) -> Iterator[Cycle]:
    """Every M-alternating cycle of the graph, each exactly once."""
    digraph, arc_edge = orientation(M)
    for walk in nx.simple_cycles(digraph):
        yield frozenset(arc_edge[(walk[i], walk[(i + 1) % len(walk)])] for i in range(len(walk)))


def alternating_cycle_neighbors(M: PerfectMatching) -> Iterator[PerfectMatching]:
    G = M.graph
    base = M.edge_set
    for cycle in neighbor_cycles(M):
        yield PerfectMatching(tuple(sorted(base.symmetric_difference(cycle))), M.graph_hash, G)


def pairwise_adjacency(matchings: Sequence[PerfectMatching]) -> Set[Tuple[int, int]]:
    """Index pairs (i < j) adjacent by the single-cycle criterion; the oracle mode."""
    pairs = set()
    for i in range(len(matchings)):
        for j in range(i + 1, len(matchings)):
            if is_adjacent(matchings[i], matchings[j]):
                pairs.add((i, j))
    return pairs


# -- distances -----------------------------------------------------------------
@dataclass(frozen=True)
class DistanceResult:
    distance: int
    witness: FlipSequence
    explored: int


def _sorted_neighbors(M: PerfectMatching) -> List[Tuple[PerfectMatching, Cycle]]:
    base = M.edge_set
    out = []
    for cycle in neighbor_cycles(M):
        nxt = PerfectMatching(tuple(sorted(base.symmetric_difference(cycle))), M.graph_hash, M.graph)
        out.append((nxt, cycle))
    out.sort(key=lambda item: item[0].edges)
    return out


def flip_distance(
    M: PerfectMatching, N: PerfectMatching, budget: Optional[int] = DEFAULT_STATE_BUDGET
) -> DistanceResult:
    """Exact flip distance by BFS in canonical neighbour order."""
    _check_same_graph(M, N)
    if M == N:
        return DistanceResult(0, FlipSequence(M), 1)
    parent: Dict[PerfectMatching, Tuple[Optional[PerfectMatching], Optional[Cycle]]] = {M: (None, None)}
    queue = deque([M])
    while queue:
        cur = queue.popleft()
        for nxt, cycle in _sorted_neighbors(cur):
            if nxt in parent:
                continue
            parent[nxt] = (cur, cycle)
            if nxt == N:
                path: List[Cycle] = []
                node = nxt
                while parent[node][0] is not None:
                    prev, cyc = parent[node]
                    path.append(cyc)  # type: ignore[arg-type]
                    node = prev  # type: ignore[assignment]
                path.reverse()
                return DistanceResult(len(path), FlipSequence(M, tuple(path)), len(parent))
            if budget is not None and len(parent) > budget:
                raise BudgetExceeded(budget, len(parent))
            queue.append(nxt)
    # every perfect matching of a bipartite graph is reachable; only a broken graph lands here
    raise NoPerfectMatching("target matching unreachable from the start matching")


def _eccentricity(args: Tuple[Sequence[Sequence[int]], int]) -> Tuple[int, int, int]:
    """(source, eccentricity, smallest index at that distance) by plain BFS."""
    adjacency, source = args
    dist = [-1] * len(adjacency)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adjacency[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    ecc = max(dist)
    return source, ecc, dist.index(ecc)


@dataclass(frozen=True)
class DiameterReport:
    diameter: int
    circuit_diameter: int
    matching_count: int
    pair: Tuple[PerfectMatching, PerfectMatching]
    witness: FlipSequence
    note: str = "circuit diameter equals the diameter on bipartite perfect matching polytopes"

    def to_json(self) -> dict:
        return {
            "diameter": self.diameter,
            "circuit_diameter": self.circuit_diameter,
            "matchings": self.matching_count,
            "pair": [self.pair[0].to_json()["edges"], self.pair[1].to_json()["edges"]],
            "witness_length": len(self.witness),
            "witness": [sorted(c) for c in self.witness.cycles],
            "note": self.note,
        }


def polytope_diameter(
    G: UndirectedGraph,
    cap: int = DEFAULT_MATCHING_CAP,
    workers: int = 1,
) -> DiameterReport:
    """Exact skeleton diameter of the perfect matching polytope of G."""
    matchings = enumerate_perfect_matchings(G, cap)
    if not matchings:
        raise NoPerfectMatching(f"{G!r} has no perfect matching; its polytope is empty")
    index = {m: i for i, m in enumerate(matchings)}
    adjacency = [sorted(index[nb] for nb in alternating_cycle_neighbors(m)) for m in matchings]

    jobs = [(adjacency, s) for s in range(len(matchings))]
    if workers > 1 and len(matchings) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eccentricity, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_eccentricity(job) for job in jobs]
    # max-reduction; ties resolve to the lowest source, then the lowest target
    source, diameter, target = max(results, key=lambda r: (r[1], -r[0]))

    witness = flip_distance(matchings[source], matchings[target], budget=None).witness
    log.info("%r: %d perfect matchings, diameter %d", G, len(matchings), diameter)
    return DiameterReport(
        diameter=diameter,
        circuit_diameter=diameter,
        matching_count=len(matchings),
        pair=(matchings[source], matchings[target]),
        witness=witness,
    )


# -- certificate check ---------------------------------------------------------
class FlipStatus(Enum):
    OK = "ok"
    NOT_A_CYCLE = "not_a_cycle"
    NOT_ALTERNATING = "not_alternating"
    NOT_PERFECT_AFTER_FLIP = "not_perfect_after_flip"


@dataclass
class ValidationResult:
    """Outcome of validate_flip_sequence; ``index`` is the failing step."""

    status: FlipStatus
    index: Optional[int] = None
    final: Optional[PerfectMatching] = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status is FlipStatus.OK


def single_cycle_vertices(G: UndirectedGraph, cycle: Iterable[int]) -> Optional[List[int]]:
    """Vertices of ``cycle`` in traversal order, or None if it is not one simple cycle."""
    edges = list(set(cycle))
    if len(edges) < 3 or any(not (0 <= e < G.num_edges) for e in edges):
        return None
    at: Dict[int, List[int]] = {}
    for e in edges:
        for x in G.edges[e]:
            at.setdefault(x, []).append(e)
    if any(len(v) != 2 for v in at.values()):
        return None
    start = min(at)
    order = [start]
    prev_edge = at[start][0]
    cur = G.other(prev_edge, start)
    while cur != start:
        order.append(cur)
        e1, e2 = at[cur]
        prev_edge = e2 if e1 == prev_edge else e1
        cur = G.other(prev_edge, cur)
    return order if len(order) == len(edges) else None


def require_cycle(G: UndirectedGraph, cycle: Iterable[int]) -> List[int]:
    order = single_cycle_vertices(G, cycle)
    if order is None:
        raise NotACycle("edge set is not a single simple cycle")
    return order


def validate_flip_sequence(seq: FlipSequence) -> ValidationResult:
    G = seq.start.graph
    running = set(seq.start.edges)
    for i, cycle in enumerate(seq.cycles):
        order = single_cycle_vertices(G, cycle)
        if order is None:
            return ValidationResult(FlipStatus.NOT_A_CYCLE, i, detail=f"step {i} is not one simple cycle")
        for v in order:
            hits = [e for e in G.incident(v) if e in cycle and e in running]
            if len(hits) != 1:
                return ValidationResult(
                    FlipStatus.NOT_ALTERNATING,
                    i,
                    detail=f"step {i}: vertex {G.vertices[v].id} has {len(hits)} matched cycle edges",
                )
        running.symmetric_difference_update(cycle)
        for v in order:
            if sum(1 for e in G.incident(v) if e in running) != 1:
                return ValidationResult(
                    FlipStatus.NOT_PERFECT_AFTER_FLIP,
                    i,
                    detail=f"step {i}: vertex {G.vertices[v].id} not covered once after the flip",
                )
    final = PerfectMatching(tuple(sorted(running)), seq.start.graph_hash, G)
    return ValidationResult(FlipStatus.OK, final=final, detail=f"{len(seq)} flips")


def apply_flips(M: PerfectMatching, cycles: Iterable[Iterable[int]]) -> PerfectMatching:
    running = set(M.edges)
    for cycle in cycles:
        running.symmetric_difference_update(cycle)
    return PerfectMatching.of(M.graph, running)


# -- sampling ------------------------------------------------------------------
def random_alternating_cycle(M: PerfectMatching, rng: random.Random, mate: Optional[List[int]] = None) -> Optional[Cycle]:
    """One random M-alternating cycle, or None if the walk got stuck.

    Walks the matching orientation from a random Left vertex (unmatched edge
    to the Right, matched edge back to the Left) until a Left vertex repeats,
    then returns the closed part.
    """
    G = M.graph
    if not isinstance(G, BipartiteGraph):
        raise TypeError("random cycles need a BipartiteGraph")
    mate = mate if mate is not None else M.mates()
    lefts = G.left()
    if not lefts:
        return None
    start = rng.choice(lefts)
    seen_at: Dict[int, int] = {start: 0}
    path_edges: List[int] = []
    cur = start
    while True:
        options = [e for e in G.incident(cur) if G.other(e, cur) != mate[cur]]
        if not options:
            return None
        e = rng.choice(options)
        right = G.other(e, cur)
        nxt = mate[right]
        path_edges.append(e)
        path_edges.append(G.edge_index(right, nxt))
        if nxt in seen_at:
            return frozenset(path_edges[2 * seen_at[nxt]:])
        seen_at[nxt] = len(path_edges) // 2
        cur = nxt


def random_flip_walk(M: PerfectMatching, steps: int, rng: random.Random) -> PerfectMatching:
    """Apply up to ``steps`` random alternating-cycle flips to M."""
    current = set(M.edges)
    cur = M
    for _ in range(steps):
        cycle = random_alternating_cycle(cur, rng)
        if cycle is None:
            continue
        current.symmetric_difference_update(cycle)
        cur = PerfectMatching(tuple(sorted(current)), M.graph_hash, M.graph)
    return cur
