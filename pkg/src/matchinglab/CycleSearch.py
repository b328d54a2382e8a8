#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Exact cycle search by edge-state propagation.

Every edge is UNDECIDED, IN or OUT. Deciding an edge updates per-vertex
counts and the path fragments formed by IN edges; the propagation rules then
force further edges until a fixpoint, and the search branches on a single
undecided edge (IN first, then OUT) at a vertex with the fewest options left.

Two modes:

    spanning=True    Hamiltonian cycles: every vertex gets exactly two IN edges
    spanning=False   all simple cycles: every vertex gets zero or two IN edges

Required edges start IN and forbidden edges start OUT. A fragment may only
close into a cycle when it is the whole solution (spanning: it covers every
vertex; otherwise: no other IN edge exists), which rules out subtours.
"""

from __future__ import annotations

import logging
from typing import FrozenSet, Iterable, Iterator, List, Optional

from .GraphCore import UndirectedGraph

log = logging.getLogger(__name__)

UNDECIDED, IN, OUT = 0, 1, -1


class _State:
    __slots__ = ("state", "deg_in", "deg_und", "end", "size", "in_count", "closed")

    def __init__(self, G: UndirectedGraph) -> None:
        n = G.num_vertices
        self.state = [UNDECIDED] * G.num_edges
        self.deg_in = [0] * n
        self.deg_und = [G.degree(v) for v in range(n)]
        self.end = list(range(n))
        self.size = [1] * n
        self.in_count = 0
        self.closed = False

    def copy(self) -> "_State":
        twin = _State.__new__(_State)
        twin.state = self.state[:]
        twin.deg_in = self.deg_in[:]
        twin.deg_und = self.deg_und[:]
        twin.end = self.end[:]
        twin.size = self.size[:]
        twin.in_count = self.in_count
        twin.closed = self.closed
        return twin


class CycleSearch:
    """Cycles of ``graph`` that contain ``required`` and avoid ``forbidden``."""

    def __init__(
        self,
        graph: UndirectedGraph,
        *,
        spanning: bool,
        required: Iterable[int] = (),
        forbidden: Iterable[int] = (),
    ) -> None:
        self.graph = graph
        self.spanning = spanning
        self.required = frozenset(required)
        self.forbidden = frozenset(forbidden)
        self.nodes = 0

    # -- edge decisions ------------------------------------------------------
    def _set_in(self, st: _State, e: int, queue: List[int]) -> bool:
        if st.state[e] == IN:
            return True
        if st.state[e] == OUT or st.closed:
            return False
        u, v = self.graph.edges[e]
        if st.deg_in[u] == 2 or st.deg_in[v] == 2:
            return False
        closing = st.end[u] == v and st.deg_in[u] > 0
        if closing:
            if self.spanning:
                if st.size[u] != self.graph.num_vertices:
                    return False
            elif st.in_count != st.size[u] - 1:
                return False
        st.state[e] = IN
        st.deg_in[u] += 1
        st.deg_in[v] += 1
        st.deg_und[u] -= 1
        st.deg_und[v] -= 1
        st.in_count += 1
        queue.append(u)
        queue.append(v)
        if closing:
            st.closed = True
            return True
        a, b = st.end[u], st.end[v]
        total = st.size[u] + st.size[v]
        st.end[a], st.end[b] = b, a
        st.size[a] = st.size[b] = total
        if self.spanning and total < self.graph.num_vertices:
            # closing a and b now would leave a subtour
            shortcut = self.graph.find_edge(a, b)
            if shortcut is not None and st.state[shortcut] == UNDECIDED:
                return self._set_out(st, shortcut, queue)
        return True

    def _set_out(self, st: _State, e: int, queue: List[int]) -> bool:
        if st.state[e] == OUT:
            return True
        if st.state[e] == IN:
            return False
        u, v = self.graph.edges[e]
        st.state[e] = OUT
        st.deg_und[u] -= 1
        st.deg_und[v] -= 1
        queue.append(u)
        queue.append(v)
        return True

    def _undecided(self, st: _State, v: int) -> List[int]:
        return [e for e in self.graph.incident(v) if st.state[e] == UNDECIDED]

    def _propagate(self, st: _State, queue: List[int]) -> bool:
        while queue:
            x = queue.pop()
            din, dund = st.deg_in[x], st.deg_und[x]
            if st.closed or din == 2:
                if dund and not all(self._set_out(st, e, queue) for e in self._undecided(st, x)):
                    return False
                continue
            if self.spanning:
                if din + dund < 2:
                    return False
                if din + dund == 2 and dund:
                    for e in self._undecided(st, x):
                        if not self._set_in(st, e, queue):
                            return False
            elif din == 1:
                if dund == 0:
                    return False
                if dund == 1 and not self._set_in(st, self._undecided(st, x)[0], queue):
                    return False
            elif dund == 1:
                if not self._set_out(st, self._undecided(st, x)[0], queue):
                    return False
        if st.closed:
            # remaining undecided edges all drop out once the cycle is closed
            for e, s in enumerate(st.state):
                if s == UNDECIDED:
                    st.state[e] = OUT
        return True

    def _choose(self, st: _State) -> Optional[int]:
        best = None
        best_key = None
        for v in range(self.graph.num_vertices):
            dund = st.deg_und[v]
            if dund == 0 or st.deg_in[v] == 2:
                continue
            if not self.spanning and st.deg_in[v] == 0 and st.in_count:
                continue
            key = (0 if st.deg_in[v] == 1 else 1, dund, v)
            if best_key is None or key < best_key:
                best, best_key = v, key
        if best is None:
            return None
        return self._undecided(st, best)[0]

    def _initial(self) -> Optional[_State]:
        st = _State(self.graph)
        queue: List[int] = list(range(self.graph.num_vertices))
        for e in sorted(self.forbidden):
            if not self._set_out(st, e, queue):
                return None
        for e in sorted(self.required):
            if not self._set_in(st, e, queue):
                return None
        return st if self._propagate(st, queue) else None

    # -- driving -------------------------------------------------------------
    def solutions(self, limit: Optional[int] = None) -> Iterator[FrozenSet[int]]:
        """Yield cycle edge sets in deterministic order."""
        if self.graph.num_vertices == 0:
            return
        root = self._initial()
        stack: List[_State] = [root] if root is not None else []
        produced = 0
        while stack:
            st = stack.pop()
            self.nodes += 1
            if st.closed:
                yield frozenset(e for e, s in enumerate(st.state) if s == IN)
                produced += 1
                if limit is not None and produced >= limit:
                    return
                continue
            e = self._choose(st)
            if e is None:
                continue
            without = st.copy()
            queue: List[int] = []
            if self._set_out(without, e, queue) and self._propagate(without, queue):
                stack.append(without)
            queue = []
            if self._set_in(st, e, queue) and self._propagate(st, queue):
                stack.append(st)
        log.debug("cycle search visited %d nodes, %d solutions", self.nodes, produced)

    def first(self) -> Optional[FrozenSet[int]]:
        for cycle in self.solutions(limit=1):
            return cycle
        return None
