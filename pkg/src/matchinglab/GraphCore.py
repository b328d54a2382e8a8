#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Immutable graph types for the matching laboratory.

Vertices and edges are addressed by dense integer indices. Symbolic names
(a_3 of some tower, x_10 of some forall gadget, v_in of a city entry) live in
role tags attached to the vertices, so gadget code can talk about roles while
the search code works on flat indices.

Graphs never change after construction. Gadget insertion goes through
GraphBuilder, which produces a fresh graph; anything cached against an older
graph (matchings, cycles) can be checked through the graph content hash.

    UndirectedGraph   simple graph, sides optional (used by the folklore
                      3SAT reduction, which is not bipartite)
    BipartiteGraph    UndirectedGraph whose every edge joins Left to Right
    DirectedGraph     simple digraph for Hamiltonian-cycle instances

Convention: in every reduction v_in vertices sit on the Left and v_out
vertices on the Right.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .LabErrors import (
    DanglingEndpoint,
    DuplicateEdge,
    DuplicateVertex,
    EdgeNotFound,
    NotBipartite,
    ScaleInvalid,
    SelfLoop,
)

log = logging.getLogger(__name__)

Edge = Tuple[int, int]


class Side(Enum):
    LEFT = "L"
    RIGHT = "R"

    @property
    def opposite(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT

    @classmethod
    def parse(cls, value: Union["Side", str, None]) -> Optional["Side"]:
        if value is None or isinstance(value, Side):
            return value
        text = str(value).strip().upper()
        if text in ("L", "LEFT"):
            return cls.LEFT
        if text in ("R", "RIGHT"):
            return cls.RIGHT
        if text in ("", "NONE", "-"):
            return None
        raise ValueError(f"unknown side {value!r}")


@dataclass(frozen=True, order=True)
class RoleTag:
    """A (gadget instance, role name) pair, written as ``gadget.role``."""

    gadget: str
    role: str

    def __str__(self) -> str:
        return f"{self.gadget}.{self.role}"

    @classmethod
    def parse(cls, text: str) -> "RoleTag":
        gadget, sep, role = text.rpartition(".")
        if not sep or not gadget or not role:
            raise ValueError(f"role tag {text!r} is not of the form gadget.role")
        return cls(gadget, role)


@dataclass(frozen=True)
class Vertex:
    id: str
    side: Optional[Side] = None
    roles: FrozenSet[RoleTag] = frozenset()


@dataclass(frozen=True)
class GadgetRecord:
    """Serialisable summary of a gadget instance (the JSON "gadgets" array)."""

    name: str
    kind: str
    params: Mapping[str, int] = field(default_factory=dict)
    role_map: Mapping[str, int] = field(default_factory=dict)


def canonical(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


# -- undirected graphs ---------------------------------------------------------
class UndirectedGraph:
    """Simple undirected graph with stable indices and role annotations."""

    def __init__(
        self,
        vertices: Sequence[Vertex],
        edges: Iterable[Edge],
        gadgets: Sequence[GadgetRecord] = (),
    ) -> None:
        self._vertices: Tuple[Vertex, ...] = tuple(vertices)
        n = len(self._vertices)

        ids = set()
        roles: Dict[RoleTag, int] = {}
        for idx, vert in enumerate(self._vertices):
            if vert.id in ids:
                raise DuplicateVertex(f"vertex id {vert.id!r} declared twice")
            ids.add(vert.id)
            for tag in vert.roles:
                if tag in roles:
                    raise DuplicateVertex(f"role {tag} resolves to vertices {roles[tag]} and {idx}")
                roles[tag] = idx
        self._roles = roles

        edge_list: List[Edge] = []
        index: Dict[Edge, int] = {}
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n) or not (0 <= v < n):
                raise DanglingEndpoint(f"edge ({u}, {v}) references a vertex outside 0..{n - 1}")
            if u == v:
                raise SelfLoop(f"self-loop at vertex {u} ({self._vertices[u].id})")
            key = canonical(u, v)
            if key in index:
                raise DuplicateEdge(
                    f"edge {self._vertices[u].id}-{self._vertices[v].id} listed twice"
                )
            index[key] = len(edge_list)
            edge_list.append(key)
        self._edges: Tuple[Edge, ...] = tuple(edge_list)
        self._index = index

        incident: List[List[int]] = [[] for _ in range(n)]
        for e, (u, v) in enumerate(self._edges):
            incident[u].append(e)
            incident[v].append(e)
        # edges are appended in index order, so every list is already sorted
        self._incident: Tuple[Tuple[int, ...], ...] = tuple(tuple(lst) for lst in incident)
        self._gadgets: Tuple[GadgetRecord, ...] = tuple(gadgets)
        self._hash: Optional[str] = None

    # -- size and lookup ---------------------------------------------------
    @property
    def vertices(self) -> Tuple[Vertex, ...]:
        return self._vertices

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self._edges

    @property
    def gadgets(self) -> Tuple[GadgetRecord, ...]:
        return self._gadgets

    @property
    def num_vertices(self) -> int:
        return len(self._vertices)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def side(self, v: int) -> Optional[Side]:
        return self._vertices[v].side

    def incident(self, v: int) -> Tuple[int, ...]:
        """Sorted edge indices incident to vertex v."""
        return self._incident[v]

    def degree(self, v: int) -> int:
        return len(self._incident[v])

    def other(self, e: int, v: int) -> int:
        a, b = self._edges[e]
        if v == a:
            return b
        if v == b:
            return a
        raise EdgeNotFound(f"vertex {v} is not an endpoint of edge {e}")

    def neighbors(self, v: int) -> List[int]:
        return sorted(self.other(e, v) for e in self._incident[v])

    def find_edge(self, u: int, v: int) -> Optional[int]:
        return self._index.get(canonical(u, v))

    def has_edge(self, u: int, v: int) -> bool:
        return canonical(u, v) in self._index

    def edge_index(self, u: int, v: int) -> int:
        e = self._index.get(canonical(u, v))
        if e is None:
            raise EdgeNotFound(f"no edge between {self._label(u)} and {self._label(v)}")
        return e

    def vertex_of(self, tag: Union[RoleTag, str]) -> int:
        """Resolve a role tag (or its ``gadget.role`` text) to its vertex."""
        if isinstance(tag, str):
            tag = RoleTag.parse(tag)
        try:
            return self._roles[tag]
        except KeyError:
            raise KeyError(f"no vertex carries role {tag}") from None

    def has_role(self, tag: RoleTag) -> bool:
        return tag in self._roles

    def index_of_id(self, vid: str) -> int:
        for idx, vert in enumerate(self._vertices):
            if vert.id == vid:
                return idx
        raise KeyError(vid)

    def _label(self, v: int) -> str:
        if 0 <= v < len(self._vertices):
            return self._vertices[v].id
        return f"#{v}"

    # -- identity ----------------------------------------------------------
    def structure(self) -> dict:
        """Plain-data view used for hashing and structural equality."""
        return {
            "vertices": [
                [vert.id, vert.side.value if vert.side else None, sorted(str(t) for t in vert.roles)]
                for vert in self._vertices
            ],
            "edges": [list(e) for e in self._edges],
        }

    @property
    def content_hash(self) -> str:
        if self._hash is None:
            blob = json.dumps(self.structure(), sort_keys=True, separators=(",", ":"))
            self._hash = hashlib.sha256(blob.encode("utf-8")).hexdigest()
        return self._hash

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UndirectedGraph):
            return NotImplemented
        return self.structure() == other.structure()

    def __hash__(self) -> int:
        return hash(self.content_hash)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(|V|={self.num_vertices}, |E|={self.num_edges})"

    def relabeled(self, perm: Sequence[int]) -> "UndirectedGraph":
        """Copy with vertex i moved to position perm[i]; edges keep their order."""
        n = self.num_vertices
        if sorted(perm) != list(range(n)):
            raise ValueError("perm is not a permutation of the vertex indices")
        verts: List[Optional[Vertex]] = [None] * n
        for old, new in enumerate(perm):
            verts[new] = self._vertices[old]
        edges = [(perm[u], perm[v]) for u, v in self._edges]
        return type(self)(verts, edges, self._gadgets)  # type: ignore[arg-type]

    def to_networkx(self):
        """networkx view (nodes are indices, edges carry their index as ``idx``)."""
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.num_vertices))
        for e, (u, v) in enumerate(self._edges):
            g.add_edge(u, v, idx=e)
        return g


class BipartiteGraph(UndirectedGraph):
    """UndirectedGraph with declared sides and only Left-Right edges."""

    def __init__(
        self,
        vertices: Sequence[Vertex],
        edges: Iterable[Edge],
        gadgets: Sequence[GadgetRecord] = (),
    ) -> None:
        super().__init__(vertices, edges, gadgets)
        for idx, vert in enumerate(self._vertices):
            if vert.side is None:
                raise NotBipartite(f"vertex {vert.id!r} (#{idx}) has no side")
        for u, v in self._edges:
            if self._vertices[u].side is self._vertices[v].side:
                raise NotBipartite(
                    f"edge {self._vertices[u].id}-{self._vertices[v].id} joins two "
                    f"{self._vertices[u].side.name} vertices"
                )

    def left(self) -> List[int]:
        return [i for i, vert in enumerate(self._vertices) if vert.side is Side.LEFT]

    def right(self) -> List[int]:
        return [i for i, vert in enumerate(self._vertices) if vert.side is Side.RIGHT]

    def left_end(self, e: int) -> int:
        u, v = self._edges[e]
        return u if self._vertices[u].side is Side.LEFT else v

    def right_end(self, e: int) -> int:
        u, v = self._edges[e]
        return v if self._vertices[u].side is Side.LEFT else u


# -- directed graphs -----------------------------------------------------------
class DirectedGraph:
    """Simple digraph: no parallel arcs, no self-loops."""

    def __init__(self, labels: Union[int, Sequence[str]], arcs: Iterable[Edge]) -> None:
        if isinstance(labels, int):
            labels = [str(i) for i in range(labels)]
        self._labels: Tuple[str, ...] = tuple(str(x) for x in labels)
        n = len(self._labels)
        arc_list: List[Edge] = []
        index: Dict[Edge, int] = {}
        for u, v in arcs:
            u, v = int(u), int(v)
            if not (0 <= u < n) or not (0 <= v < n):
                raise DanglingEndpoint(f"arc ({u}, {v}) references a vertex outside 0..{n - 1}")
            if u == v:
                raise SelfLoop(f"self-loop at vertex {u}")
            if (u, v) in index:
                raise DuplicateEdge(f"arc ({u}, {v}) listed twice")
            index[(u, v)] = len(arc_list)
            arc_list.append((u, v))
        self._arcs: Tuple[Edge, ...] = tuple(arc_list)
        self._index = index
        outs: List[List[int]] = [[] for _ in range(n)]
        ins: List[List[int]] = [[] for _ in range(n)]
        for a, (u, v) in enumerate(arc_list):
            outs[u].append(a)
            ins[v].append(a)
        self._out = tuple(tuple(x) for x in outs)
        self._in = tuple(tuple(x) for x in ins)

    @property
    def labels(self) -> Tuple[str, ...]:
        return self._labels

    @property
    def arcs(self) -> Tuple[Edge, ...]:
        return self._arcs

    @property
    def num_vertices(self) -> int:
        return len(self._labels)

    @property
    def num_arcs(self) -> int:
        return len(self._arcs)

    def out_arcs(self, v: int) -> Tuple[int, ...]:
        return self._out[v]

    def in_arcs(self, v: int) -> Tuple[int, ...]:
        return self._in[v]

    def out_degree(self, v: int) -> int:
        return len(self._out[v])

    def in_degree(self, v: int) -> int:
        return len(self._in[v])

    def successors(self, v: int) -> List[int]:
        return sorted(self._arcs[a][1] for a in self._out[v])

    def find_arc(self, u: int, v: int) -> Optional[int]:
        return self._index.get((u, v))

    def arc_index(self, u: int, v: int) -> int:
        a = self._index.get((u, v))
        if a is None:
            raise EdgeNotFound(f"no arc {u}->{v}")
        return a

    @property
    def content_hash(self) -> str:
        blob = json.dumps({"labels": list(self._labels), "arcs": [list(a) for a in self._arcs]})
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def relabeled(self, perm: Sequence[int]) -> "DirectedGraph":
        labels: List[str] = [""] * self.num_vertices
        for old, new in enumerate(perm):
            labels[new] = self._labels[old]
        return DirectedGraph(labels, [(perm[u], perm[v]) for u, v in self._arcs])

    def __repr__(self) -> str:
        return f"DirectedGraph(|V|={self.num_vertices}, |A|={self.num_arcs})"


# -- construction --------------------------------------------------------------
VertexSpec = Union[Vertex, Tuple, Mapping]


def _vertex_from_spec(spec: VertexSpec, position: int) -> Vertex:
    if isinstance(spec, Vertex):
        return spec
    if isinstance(spec, Mapping):
        roles = frozenset(RoleTag.parse(r) if isinstance(r, str) else r for r in spec.get("roles", ()))
        return Vertex(str(spec.get("id", position)), Side.parse(spec.get("side")), roles)
    items = tuple(spec)
    vid = str(items[0])
    side = Side.parse(items[1]) if len(items) > 1 else None
    roles = frozenset(
        RoleTag.parse(r) if isinstance(r, str) else r for r in (items[2] if len(items) > 2 else ())
    )
    return Vertex(vid, side, roles)


def build_graph(vertex_specs: Iterable[VertexSpec], edge_list: Iterable[Edge]) -> BipartiteGraph:
    """Validate and build a bipartite graph.

    vertex_specs entries are Vertex objects, ``(id, side[, roles])`` tuples or
    ``{"id", "side", "roles"}`` mappings; sides accept "L"/"R"/"Left"/"Right".
    """
    verts = [_vertex_from_spec(s, i) for i, s in enumerate(vertex_specs)]
    return BipartiteGraph(verts, list(edge_list))


class GraphBuilder:
    """Mutable staging area for gadget construction.

    Vertices are appended and never removed; edges may be removed (subdivision
    replaces an edge by a path). build() assigns dense edge indices in
    insertion order of the surviving edges.
    """

    def __init__(self, base: Optional[UndirectedGraph] = None) -> None:
        self._ids: List[str] = []
        self._sides: List[Optional[Side]] = []
        self._roles: List[set] = []
        self._id_set: set = set()
        self._edges: Dict[Edge, None] = {}
        self._adj: List[set] = []
        self._gadgets: List[GadgetRecord] = []
        if base is not None:
            for vert in base.vertices:
                self.add_vertex(vert.id, vert.side, vert.roles)
            for u, v in base.edges:
                self.add_edge(u, v)
            self._gadgets.extend(base.gadgets)

    @property
    def num_vertices(self) -> int:
        return len(self._ids)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def add_vertex(self, vid: str, side: Optional[Side], roles: Iterable[RoleTag] = ()) -> int:
        vid = str(vid)
        if vid in self._id_set:
            raise DuplicateVertex(f"vertex id {vid!r} declared twice")
        self._id_set.add(vid)
        self._ids.append(vid)
        self._sides.append(side)
        self._roles.append(set(roles))
        self._adj.append(set())
        return len(self._ids) - 1

    def fresh_id(self, stem: str) -> str:
        if stem not in self._id_set:
            return stem
        k = 2
        while f"{stem}'{k}" in self._id_set:
            k += 1
        return f"{stem}'{k}"

    def tag(self, v: int, *tags: RoleTag) -> None:
        self._roles[v].update(tags)

    def side(self, v: int) -> Optional[Side]:
        return self._sides[v]

    def vertex_id(self, v: int) -> str:
        return self._ids[v]

    def has_edge(self, u: int, v: int) -> bool:
        return canonical(u, v) in self._edges

    def neighbors(self, v: int) -> List[int]:
        return sorted(self._adj[v])

    def add_edge(self, u: int, v: int) -> None:
        n = len(self._ids)
        if not (0 <= u < n) or not (0 <= v < n):
            raise DanglingEndpoint(f"edge ({u}, {v}) references a vertex outside 0..{n - 1}")
        if u == v:
            raise SelfLoop(f"self-loop at {self._ids[u]}")
        key = canonical(u, v)
        if key in self._edges:
            raise DuplicateEdge(f"edge {self._ids[u]}-{self._ids[v]} already present")
        self._edges[key] = None
        self._adj[u].add(v)
        self._adj[v].add(u)

    def add_path(self, *verts: int) -> None:
        for u, v in zip(verts, verts[1:]):
            self.add_edge(u, v)

    def remove_edge(self, u: int, v: int) -> None:
        key = canonical(u, v)
        if key not in self._edges:
            raise EdgeNotFound(f"no edge {self._ids[u]}-{self._ids[v]} to remove")
        del self._edges[key]
        self._adj[u].discard(v)
        self._adj[v].discard(u)

    def subdivide(self, u: int, v: int, count: int, stem: str = "") -> List[int]:
        """Replace edge uv by a path u - s_1 - ... - s_count - v.

        Sides of the new vertices alternate starting opposite to u. Returns
        the new vertex indices in path order.
        """
        if count < 1:
            raise ScaleInvalid(f"subdivision count must be >= 1, got {count}")
        self.remove_edge(u, v)
        stem = stem or f"{self._ids[u]}~{self._ids[v]}"
        side = self._sides[u]
        fresh: List[int] = []
        for i in range(1, count + 1):
            side = side.opposite if side is not None else None
            fresh.append(self.add_vertex(self.fresh_id(f"{stem}#{i}"), side))
        self.add_path(u, *fresh, v)
        return fresh

    def register(self, record: GadgetRecord) -> None:
        self._gadgets.append(record)

    def _vertices(self) -> List[Vertex]:
        return [
            Vertex(vid, side, frozenset(roles))
            for vid, side, roles in zip(self._ids, self._sides, self._roles)
        ]

    def build(self) -> BipartiteGraph:
        graph = BipartiteGraph(self._vertices(), list(self._edges), self._gadgets)
        log.debug("built %r", graph)
        return graph

    def build_undirected(self) -> UndirectedGraph:
        return UndirectedGraph(self._vertices(), list(self._edges), self._gadgets)


# -- subdivision ---------------------------------------------------------------
@dataclass(frozen=True)
class SubdivisionResult:
    """Outcome of subdivide_edge.

    edge_map sends every surviving old edge index to its new index (vertex
    indices are unchanged; new vertices are appended). side_flip is True when
    an odd count made the graph non-bipartite, in which case ``graph`` is a
    plain UndirectedGraph.
    """

    graph: UndirectedGraph
    new_vertices: Tuple[int, ...]
    edge_map: Mapping[int, int]
    side_flip: bool


def subdivide_edge(G: UndirectedGraph, e: int, count: int) -> SubdivisionResult:
    if not (0 <= e < G.num_edges):
        raise EdgeNotFound(f"edge index {e} not in 0..{G.num_edges - 1}")
    if count < 1:
        raise ScaleInvalid(f"subdivision count must be >= 1, got {count}")
    u, v = G.edges[e]
    builder = GraphBuilder(G)
    fresh = builder.subdivide(u, v, count)
    edge_map = {old: (old if old < e else old - 1) for old in range(G.num_edges) if old != e}
    side_flip = count % 2 == 1
    if side_flip or not isinstance(G, BipartiteGraph):
        graph: UndirectedGraph = builder.build_undirected()
    else:
        graph = builder.build()
    log.debug("subdivided edge %d of %r %d times -> %r", e, G, count, graph)
    return SubdivisionResult(graph, tuple(fresh), edge_map, side_flip)


# -- bipartiteness certificate -------------------------------------------------
@dataclass(frozen=True)
class BipartiteCertificate:
    """Either a proper 2-colouring or an odd closed walk (vertex sequence)."""

    coloring: Optional[Tuple[int, ...]] = None
    odd_walk: Optional[Tuple[int, ...]] = None

    @property
    def ok(self) -> bool:
        return self.coloring is not None

    def verify(self, G: UndirectedGraph) -> bool:
        if self.coloring is not None:
            return all(self.coloring[u] != self.coloring[v] for u, v in G.edges)
        walk = self.odd_walk or ()
        if len(walk) % 2 == 0:
            return False
        return all(G.has_edge(walk[i], walk[(i + 1) % len(walk)]) for i in range(len(walk)))


def is_bipartite_certificate(G: UndirectedGraph) -> BipartiteCertificate:
    n = G.num_vertices
    color = [-1] * n
    parent = [-1] * n
    depth = [0] * n
    for root in range(n):
        if color[root] != -1:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in G.neighbors(u):
                if color[w] == -1:
                    color[w] = 1 - color[u]
                    parent[w] = u
                    depth[w] = depth[u] + 1
                    queue.append(w)
                elif color[w] == color[u]:
                    return BipartiteCertificate(odd_walk=_odd_cycle(u, w, parent, depth))
    return BipartiteCertificate(coloring=tuple(color))


def _odd_cycle(u: int, w: int, parent: List[int], depth: List[int]) -> Tuple[int, ...]:
    # u and w have equal BFS parity; climb to their lowest common ancestor
    up: List[int] = []
    down: List[int] = []
    a, b = u, w
    while depth[a] > depth[b]:
        up.append(a)
        a = parent[a]
    while depth[b] > depth[a]:
        down.append(b)
        b = parent[b]
    while a != b:
        up.append(a)
        down.append(b)
        a, b = parent[a], parent[b]
    return tuple(up + [a] + list(reversed(down)))
