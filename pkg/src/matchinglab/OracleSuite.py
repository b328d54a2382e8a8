#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Brute-force ground truth the reductions are checked against.

    ham_cycle               exact Hamiltonian-cycle search, directed or undirected
    ham_cycle_respecting    Hamiltonian cycle of H whose designated arcs are a pattern
    oracle_provider         the above as a (cached) ham_provider for synthesis
    forall_exists_decision  every pattern extends to a Hamiltonian cycle?
    cnf_brute_force         satisfiability and Max-SAT value by enumeration
    WalkRecord / eps_good_check
                            closed walks and the |W_1| >= (1 - eps) n test

All of these are exponential on purpose and refuse inputs past a fixed size
instead of degrading to heuristics.
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .CycleSearch import CycleSearch
from .GraphCore import DirectedGraph, UndirectedGraph
from .Instances import CnfFormula, HamInstance, Pattern, all_assignments
from .LabErrors import InvalidWalk, InvariantViolation, TooManyPairs, TooManyVariables
from .MatchingEngine import single_cycle_vertices

log = logging.getLogger(__name__)

MAX_PATTERN_PAIRS = 20
MAX_CNF_VARIABLES = 24

Graph = Union[DirectedGraph, UndirectedGraph]


# -- Hamiltonian cycles --------------------------------------------------------
def _directed_ham_cycle(H: DirectedGraph, forbidden: FrozenSet[int], required: FrozenSet[int]) -> Optional[List[int]]:
    n = H.num_vertices
    forced: Dict[int, int] = {}
    for a in required:
        u, v = H.arcs[a]
        if forced.get(u, v) != v:
            return None
        forced[u] = v
    if len(set(forced.values())) != len(forced):
        return None

    out_ok = [[H.arcs[a][1] for a in H.out_arcs(v) if a not in forbidden] for v in range(n)]
    for u, v in forced.items():
        out_ok[u] = [v]
    in_ok: List[List[int]] = [[] for _ in range(n)]
    for u in range(n):
        for v in out_ok[u]:
            in_ok[v].append(u)
    for v in range(n):
        out_ok[v].sort()

    visited = [False] * n
    order = [0]
    visited[0] = True

    def feasible(cur: int) -> bool:
        # every unvisited vertex still needs a way in and a way out
        for x in range(n):
            if visited[x]:
                continue
            if not any(u == cur or not visited[u] for u in in_ok[x]):
                return False
            if not any(w == 0 or not visited[w] for w in out_ok[x]):
                return False
        return True

    def extend(cur: int) -> bool:
        if len(order) == n:
            return 0 in out_ok[cur]
        for nxt in out_ok[cur]:
            if visited[nxt]:
                continue
            visited[nxt] = True
            order.append(nxt)
            if feasible(nxt) and extend(nxt):
                return True
            order.pop()
            visited[nxt] = False
        return False

    return order if extend(0) else None


def _undirected_ham_cycle(G: UndirectedGraph, forbidden: FrozenSet[int], required: FrozenSet[int]) -> Optional[List[int]]:
    cycle = CycleSearch(G, spanning=True, required=required, forbidden=forbidden).first()
    if cycle is None:
        return None
    order = single_cycle_vertices(G, cycle)
    if order is None:
        raise InvariantViolation("cycle search returned a non-cycle")
    if order[1] > order[-1]:
        order = [order[0]] + order[:0:-1]
    return order


def ham_cycle(
    graph: Graph,
    mode: str = "directed",
    forbidden: Iterable[int] = (),
    required: Iterable[int] = (),
) -> Optional[List[int]]:
    """Vertex order of a Hamiltonian cycle, starting at vertex 0, or None.

    forbidden/required hold arc indices (directed) or edge indices
    (undirected). Branching tries the lowest-index candidate first, so the
    answer is deterministic.
    """
    forbidden_set, required_set = frozenset(forbidden), frozenset(required)
    if mode not in ("directed", "undirected"):
        raise ValueError(f"unknown mode {mode!r}")
    n = graph.num_vertices
    if n < 3 or forbidden_set & required_set:
        return None
    if mode == "directed":
        if not isinstance(graph, DirectedGraph):
            raise TypeError("directed mode needs a DirectedGraph")
        order = _directed_ham_cycle(graph, forbidden_set, required_set)
        if order is not None:
            used = {graph.arc_index(order[i], order[(i + 1) % n]) for i in range(n)}
            if used & forbidden_set or not required_set <= used:
                raise InvariantViolation("directed search broke its own arc constraints")
    else:
        if isinstance(graph, DirectedGraph):
            raise TypeError("undirected mode needs an UndirectedGraph")
        order = _undirected_ham_cycle(graph, forbidden_set, required_set)
        if order is not None:
            used = {graph.edge_index(order[i], order[(i + 1) % n]) for i in range(n)}
            if used & forbidden_set or not required_set <= used:
                raise InvariantViolation("cycle search broke its own edge constraints")
    return order


def ham_cycle_respecting(instance: HamInstance, pattern: Pattern) -> Optional[List[int]]:
    """Hamiltonian cycle C of H with C & E' == P."""
    forbidden = instance.designated_arcs - pattern.arcs
    order = ham_cycle(instance.graph, "directed", forbidden=forbidden, required=pattern.arcs)
    if order is not None:
        H, n = instance.graph, instance.n
        used = {H.arc_index(order[i], order[(i + 1) % n]) for i in range(n)}
        if used & instance.designated_arcs != pattern.arcs:
            raise InvariantViolation(f"cycle for {pattern} does not respect it")
    return order


def oracle_provider(instance: HamInstance) -> Callable[[Pattern], Optional[List[int]]]:
    """ham_provider backed by the exact solver, memoised per pattern."""
    cache: Dict[Tuple[bool, ...], Optional[List[int]]] = {}

    def provide(pattern: Pattern) -> Optional[List[int]]:
        if pattern.choices not in cache:
            cache[pattern.choices] = ham_cycle_respecting(instance, pattern)
        return cache[pattern.choices]

    return provide


# -- forall-exists -------------------------------------------------------------
@dataclass(frozen=True)
class PatternWitness:
    pattern: Pattern
    cycle: Optional[List[int]]

    @property
    def ok(self) -> bool:
        return self.cycle is not None

    def to_json(self) -> dict:
        return {"pattern": str(self.pattern), "arcs": sorted(self.pattern.arcs), "cycle": self.cycle}


@dataclass
class ForallExistsResult:
    verdict: bool
    table: List[PatternWitness] = field(default_factory=list)

    @property
    def refuting(self) -> Optional[Pattern]:
        for row in self.table:
            if not row.ok:
                return row.pattern
        return None

    def to_json(self) -> dict:
        refuting = self.refuting
        return {
            "verdict": "yes" if self.verdict else "no",
            "patterns": len(self.table),
            "refuting_pattern": str(refuting) if refuting is not None else None,
            "table": [row.to_json() for row in self.table],
        }


def _solve_pattern(args: Tuple[HamInstance, Pattern]) -> PatternWitness:
    instance, pattern = args
    return PatternWitness(pattern, ham_cycle_respecting(instance, pattern))


def forall_exists_decision(
    instance: HamInstance, max_pairs: int = MAX_PATTERN_PAIRS, workers: int = 1
) -> ForallExistsResult:
    """Yes iff every one of the 2^k patterns has a respecting Hamiltonian cycle."""
    if instance.k > max_pairs:
        raise TooManyPairs(f"{instance.k} designated pairs exceed the enumeration cap of {max_pairs}")
    jobs = [(instance, p) for p in instance.patterns()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            table = list(pool.map(_solve_pattern, jobs))
    else:
        table = [_solve_pattern(job) for job in jobs]
    verdict = all(row.ok for row in table)
    log.info("forall-exists: %d patterns, verdict %s", len(table), "yes" if verdict else "no")
    return ForallExistsResult(verdict, table)


# -- CNF -----------------------------------------------------------------------
@dataclass(frozen=True)
class CnfResult:
    satisfiable: bool
    max_satisfied: int
    num_clauses: int
    witness: Tuple[bool, ...]

    def to_json(self) -> dict:
        return {
            "satisfiable": self.satisfiable,
            "max_satisfied": self.max_satisfied,
            "clauses": self.num_clauses,
            "witness": [int(b) for b in self.witness],
        }


def cnf_brute_force(formula: CnfFormula, max_vars: int = MAX_CNF_VARIABLES) -> CnfResult:
    if formula.num_vars > max_vars:
        raise TooManyVariables(f"{formula.num_vars} variables exceed the brute-force cap of {max_vars}")
    m = formula.num_clauses
    best, witness = -1, ()
    for assignment in all_assignments(formula.num_vars):
        count = formula.satisfied(assignment)
        if count > best:
            best, witness = count, tuple(assignment)
            if best == m:
                break
    return CnfResult(best == m, best, m, witness)


# -- walks ---------------------------------------------------------------------
@dataclass(frozen=True)
class WalkRecord:
    """Closed walk in an undirected graph; consecutive vertices (cyclically) adjacent."""

    walk: Tuple[int, ...]
    graph: UndirectedGraph

    def __post_init__(self) -> None:
        G, W = self.graph, self.walk
        if len(W) < 2:
            raise InvalidWalk(f"a closed walk needs at least two steps, got {len(W)}")
        for x in W:
            if not (0 <= x < G.num_vertices):
                raise InvalidWalk(f"walk visits vertex {x} outside 0..{G.num_vertices - 1}")
        for i, u in enumerate(W):
            v = W[(i + 1) % len(W)]
            if not G.has_edge(u, v):
                raise InvalidWalk(f"walk steps {u}->{v} along a non-edge")

    @property
    def n(self) -> int:
        return self.graph.num_vertices

    @property
    def m(self) -> int:
        return len(self.walk)

    @property
    def visits(self) -> Dict[int, int]:
        counts = Counter({v: 0 for v in range(self.n)})
        counts.update(self.walk)
        return dict(counts)

    def levels(self) -> Dict[int, FrozenSet[int]]:
        """W_i: vertices visited exactly i times (W_0 included)."""
        out: Dict[int, set] = {}
        for v, c in self.visits.items():
            out.setdefault(c, set()).add(v)
        return {i: frozenset(vs) for i, vs in sorted(out.items())}

    @property
    def w1_size(self) -> int:
        return sum(1 for c in self.visits.values() if c == 1)

    def to_json(self) -> dict:
        return {
            "length": self.m,
            "n": self.n,
            "w1": self.w1_size,
            "levels": {str(i): len(vs) for i, vs in self.levels().items()},
        }


def _fraction(eps: Union[Fraction, int, float, str]) -> Fraction:
    if isinstance(eps, float):
        return Fraction(str(eps))
    return Fraction(eps)


def eps_good_check(walk: WalkRecord, eps: Union[Fraction, int, float, str], n: Optional[int] = None) -> Tuple[bool, int]:
    """(|W_1| >= (1 - eps) n, |W_1|), evaluated in exact arithmetic."""
    if n is None:
        n = walk.n
    elif n != walk.n:
        raise InvalidWalk(f"walk lives on {walk.n} vertices, not {n}")
    w1 = walk.w1_size
    return w1 >= (1 - _fraction(eps)) * n, w1


def walk_from_order(G: UndirectedGraph, order: Sequence[int]) -> WalkRecord:
    return WalkRecord(tuple(order), G)
