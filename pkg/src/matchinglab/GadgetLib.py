#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Gadgets of the hardness constructions: tower, city, XOR, ladder, forall.

Constructors come in two layers. The ``add_*`` functions extend a
GraphBuilder in place and return a GadgetHandle (these are what the
reductions call); the ``build_*`` functions and ``insert_xor`` produce a
standalone graph plus handle.

Roles and conventions
---------------------
tower   v, w, a_0..a_h, b_0..b_h. Edges v a_0, b_0 w, rungs a_i b_i
        (i = 0..h) and the two rails a_i a_{i-1}, b_i b_{i-1}.
city    x, y, plus towers T1..Tt chained so that tower i has v = b_0 and
        a_0 = w of tower i-1: consecutive towers share the edge b_0 w / v a_0.
        Entry edge ("first edge") is x a_0 of T1.
xor     a, b, u, v, p_1..p_4, q_1..q_4 and cities C1..C4 between p_i and q_i.
        ab is subdivided by p_1..p_4, uv by q_1..q_4 (v on the side of a).
ladder  a_0..a_6, b_0..b_6; rungs a_i b_i for i = 1..5, rails for i = 0..5.
forall  v_out, u_in, w_in, x_1..x_10, 4 cities, 3 XORs and t ladders.

XOR gadgets act on *logical* edges. Once ab carries an XOR it no longer
exists as an edge; later XORs on ab act on the middle pair p_2 p_3 of its
chain instead. GadgetRegistry records which XOR side each logical pair became
and resolves logical pairs to physical edges.

Harnesses close a gadget's boundary so well-behaved visits become
alternating cycles: the tower harness adds the edge w v; the ladder harness
adds the paths a_6 t_1 t_2 b_6 (top) and a_0 s_1 s_2 b_0 (bottom).
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from .CycleSearch import CycleSearch
from .GraphCore import (
    BipartiteGraph,
    GadgetRecord,
    GraphBuilder,
    RoleTag,
    Side,
    UndirectedGraph,
    canonical,
    is_bipartite_certificate,
)
from .LabErrors import (
    BudgetExceeded,
    EdgeNotFound,
    InvariantViolation,
    NotACycle,
    NotBipartite,
    ScaleInvalid,
    StateNotSemiDefault,
    Unreached,
    WrongGraph,
)
from .MatchingEngine import (
    Cycle,
    FlipSequence,
    PerfectMatching,
    enumerate_perfect_matchings,
    neighbor_cycles,
    single_cycle_vertices,
    validate_flip_sequence,
)

log = logging.getLogger(__name__)

RolePair = Tuple[str, str]


class GadgetKind(Enum):
    TOWER = "tower"
    CITY = "city"
    XOR = "xor"
    LADDER = "ladder"
    FORALL = "forall"


@dataclass(eq=False)
class GadgetHandle:
    kind: GadgetKind
    name: str
    params: Dict[str, int]
    roles: Dict[str, int]
    children: List["GadgetHandle"] = field(default_factory=list)

    def vertex(self, role: str) -> int:
        return self.roles[role]

    def of_kind(self, kind: GadgetKind) -> List["GadgetHandle"]:
        return [c for c in self.children if c.kind is kind]

    def walk(self) -> Iterable["GadgetHandle"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def record(self) -> GadgetRecord:
        return GadgetRecord(self.name, self.kind.value, dict(self.params), dict(self.roles))

    def __repr__(self) -> str:
        return f"GadgetHandle({self.kind.value} {self.name} {self.params})"


# -- edge role tables ----------------------------------------------------------
def tower_edge_roles(h: int) -> Tuple[RolePair, ...]:
    pairs: List[RolePair] = [("v", "a_0"), ("b_0", "w")]
    pairs += [(f"a_{i}", f"b_{i}") for i in range(h + 1)]
    pairs += [(f"a_{i}", f"a_{i - 1}") for i in range(1, h + 1)]
    pairs += [(f"b_{i}", f"b_{i - 1}") for i in range(1, h + 1)]
    return tuple(pairs)


LADDER_EDGE_ROLES: Tuple[RolePair, ...] = tuple(
    [(f"a_{i}", f"b_{i}") for i in range(1, 6)]
    + [(f"a_{i}", f"a_{i + 1}") for i in range(6)]
    + [(f"b_{i}", f"b_{i + 1}") for i in range(6)]
)


def edge_roles(handle: GadgetHandle) -> Tuple[RolePair, ...]:
    if handle.kind is GadgetKind.TOWER:
        return tower_edge_roles(handle.params["h"])
    if handle.kind is GadgetKind.LADDER:
        return LADDER_EDGE_ROLES
    raise TypeError(f"{handle.kind.value} gadgets have no fixed edge table")


def role_edge(G: UndirectedGraph, handle: GadgetHandle, r1: str, r2: str) -> int:
    return G.edge_index(handle.roles[r1], handle.roles[r2])


def gadget_edges(G: UndirectedGraph, handle: GadgetHandle) -> FrozenSet[int]:
    """Edges owned by a tower or ladder (for a city: the union of its towers)."""
    if handle.kind is GadgetKind.CITY:
        return frozenset().union(*(gadget_edges(G, t) for t in handle.children))
    return frozenset(role_edge(G, handle, a, b) for a, b in edge_roles(handle))


def _check_owner(G: UndirectedGraph, handle: GadgetHandle) -> None:
    role, v = next(iter(handle.roles.items()))
    if not (0 <= v < G.num_vertices) or RoleTag(handle.name, role) not in G.vertices[v].roles:
        raise WrongGraph(f"{handle!r} is not part of {G!r}")


# -- builder layer -------------------------------------------------------------
def _new(b: GraphBuilder, gadget: str, role: str, side: Optional[Side]) -> int:
    return b.add_vertex(b.fresh_id(f"{gadget}.{role}"), side, [RoleTag(gadget, role)])


def add_tower(
    b: GraphBuilder,
    name: str,
    h: int,
    v: Optional[int] = None,
    a0: Optional[int] = None,
    w: Optional[int] = None,
    v_side: Side = Side.LEFT,
) -> GadgetHandle:
    """Add a tower of height h; v, a_0 and w may be existing vertices.

    When a_0 is given, the edge v a_0 must already exist (city chaining).
    """
    if h < 1:
        raise ScaleInvalid(f"tower height must be >= 1, got {h}")
    if v is None:
        v = _new(b, name, "v", v_side)
    else:
        v_side = b.side(v) or v_side
        b.tag(v, RoleTag(name, "v"))
    opp = v_side.opposite
    roles: Dict[str, int] = {"v": v}
    if a0 is None:
        roles["a_0"] = _new(b, name, "a_0", opp)
        b.add_edge(v, roles["a_0"])
    else:
        if not b.has_edge(v, a0):
            raise EdgeNotFound(f"chained tower {name}: v and a_0 are not adjacent")
        b.tag(a0, RoleTag(name, "a_0"))
        roles["a_0"] = a0
    roles["b_0"] = _new(b, name, "b_0", v_side)
    for i in range(1, h + 1):
        a_side = opp if i % 2 == 0 else v_side
        roles[f"a_{i}"] = _new(b, name, f"a_{i}", a_side)
        roles[f"b_{i}"] = _new(b, name, f"b_{i}", a_side.opposite)
    if w is None:
        roles["w"] = _new(b, name, "w", opp)
    else:
        if b.side(w) not in (None, opp):
            raise NotBipartite(f"tower {name}: w must lie opposite to v")
        b.tag(w, RoleTag(name, "w"))
        roles["w"] = w
    b.add_edge(roles["b_0"], roles["w"])
    for i in range(h + 1):
        b.add_edge(roles[f"a_{i}"], roles[f"b_{i}"])
    for i in range(1, h + 1):
        b.add_edge(roles[f"a_{i}"], roles[f"a_{i - 1}"])
        b.add_edge(roles[f"b_{i}"], roles[f"b_{i - 1}"])
    handle = GadgetHandle(GadgetKind.TOWER, name, {"h": h}, roles)
    b.register(handle.record())
    return handle


def add_city(b: GraphBuilder, name: str, x: int, y: int, t_c: int, h_c: int) -> GadgetHandle:
    """Chain t_c towers of height h_c from x to y (x and y on opposite sides)."""
    if t_c < 1 or h_c < 1:
        raise ScaleInvalid(f"city needs width and height >= 1, got t_c={t_c}, h_c={h_c}")
    if b.side(x) is not None and b.side(x) is b.side(y):
        # a city is an odd x-y path; same-side ends would break the parity
        raise NotBipartite(f"city {name}: x and y lie on the same side")
    b.tag(x, RoleTag(name, "x"))
    b.tag(y, RoleTag(name, "y"))
    towers: List[GadgetHandle] = []
    prev: Optional[GadgetHandle] = None
    for i in range(1, t_c + 1):
        tname = f"{name}/T{i}"
        if prev is None:
            tower = add_tower(b, tname, h_c, v=x, w=y if t_c == 1 else None)
        else:
            tower = add_tower(
                b, tname, h_c, v=prev.roles["b_0"], a0=prev.roles["w"], w=y if i == t_c else None
            )
        towers.append(tower)
        prev = tower
    handle = GadgetHandle(GadgetKind.CITY, name, {"t_c": t_c, "h_c": h_c}, {"x": x, "y": y}, towers)
    b.register(handle.record())
    return handle


def add_ladder(
    b: GraphBuilder,
    name: str,
    portals: Optional[Mapping[str, int]] = None,
    a0_side: Side = Side.LEFT,
) -> GadgetHandle:
    """Add a ladder; ``portals`` may bind a_0, b_0, a_6, b_6 to existing vertices."""
    portals = dict(portals or {})
    if "a_0" in portals and b.side(portals["a_0"]) is not None:
        a0_side = b.side(portals["a_0"])  # type: ignore[assignment]
    roles: Dict[str, int] = {}
    for i in range(7):
        a_side = a0_side if i % 2 == 0 else a0_side.opposite
        for col, side in (("a", a_side), ("b", a_side.opposite)):
            role = f"{col}_{i}"
            if role in portals:
                v = portals[role]
                if b.side(v) not in (None, side):
                    raise NotBipartite(f"ladder {name}: portal {role} on the wrong side")
                b.tag(v, RoleTag(name, role))
                roles[role] = v
            else:
                roles[role] = _new(b, name, role, side)
    for r1, r2 in LADDER_EDGE_ROLES:
        b.add_edge(roles[r1], roles[r2])
    handle = GadgetHandle(GadgetKind.LADDER, name, {}, roles)
    b.register(handle.record())
    return handle


# -- registry and logical edges ------------------------------------------------
Segment = Tuple  # ("pair", u, v) or ("city", handle)


def xor_chain(xor: GadgetHandle, side: str) -> List[Segment]:
    """Traversal of one XOR side, from a to b ("ab") or from u to v ("uv")."""
    r = xor.roles
    c = xor.of_kind(GadgetKind.CITY)
    if side == "ab":
        return [
            ("pair", r["a"], r["p_1"]), ("city", c[0]), ("pair", r["q_1"], r["q_2"]), ("city", c[1]),
            ("pair", r["p_2"], r["p_3"]), ("city", c[2]), ("pair", r["q_3"], r["q_4"]), ("city", c[3]),
            ("pair", r["p_4"], r["b"]),
        ]
    return [
        ("pair", r["u"], r["q_1"]), ("city", c[0]), ("pair", r["p_1"], r["p_2"]), ("city", c[1]),
        ("pair", r["q_2"], r["q_3"]), ("city", c[2]), ("pair", r["p_3"], r["p_4"]), ("city", c[3]),
        ("pair", r["q_4"], r["v"]),
    ]


def _side_ends(xor: GadgetHandle, side: str) -> Tuple[int, int]:
    return (xor.roles["a"], xor.roles["b"]) if side == "ab" else (xor.roles["u"], xor.roles["v"])


class GadgetRegistry:
    """Top-level gadgets of a construction plus the logical-edge table."""

    def __init__(self) -> None:
        self.top: List[GadgetHandle] = []
        self.logical: Dict[FrozenSet[int], Tuple[GadgetHandle, str]] = {}

    def add(self, handle: GadgetHandle) -> GadgetHandle:
        self.top.append(handle)
        return handle

    def all(self) -> List[GadgetHandle]:
        return [h for top in self.top for h in top.walk()]

    def of_kind(self, kind: GadgetKind) -> List[GadgetHandle]:
        return [h for h in self.all() if h.kind is kind]

    def cities(self) -> List[GadgetHandle]:
        return self.of_kind(GadgetKind.CITY)

    def towers(self) -> List[GadgetHandle]:
        return self.of_kind(GadgetKind.TOWER)

    def census(self) -> Dict[str, int]:
        counts = {kind.value: 0 for kind in GadgetKind}
        for h in self.all():
            counts[h.kind.value] += 1
        return counts

    # -- logical pairs ---------------------------------------------------------
    def representative(self, has_edge, u: int, v: int) -> Tuple[int, int]:
        """Physical edge standing in for the logical pair uv (for a new XOR)."""
        key = frozenset((u, v))
        if key in self.logical:
            xor, side = self.logical[key]
            middle = xor_chain(xor, side)[4]
            return self.representative(has_edge, middle[1], middle[2])
        if has_edge(u, v):
            return u, v
        raise EdgeNotFound(f"no edge or logical edge between vertices {u} and {v}")

    def traverse(self, G: UndirectedGraph, u: int, v: int) -> Tuple[List[int], List[GadgetHandle]]:
        """Physical edges and cities a cycle uses when it takes the logical pair uv."""
        key = frozenset((u, v))
        if key not in self.logical:
            return [G.edge_index(u, v)], []
        xor, side = self.logical[key]
        edges: List[int] = []
        cities: List[GadgetHandle] = []
        for seg in xor_chain(xor, side):
            if seg[0] == "city":
                cities.append(seg[1])
            else:
                sub_edges, sub_cities = self.traverse(G, seg[1], seg[2])
                edges += sub_edges
                cities += sub_cities
        return edges, cities

    def end_edge(self, G: UndirectedGraph, u: int, v: int) -> int:
        """The physical edge at u's end of the logical pair uv."""
        key = frozenset((u, v))
        if key not in self.logical:
            return G.edge_index(u, v)
        xor, side = self.logical[key]
        start, _ = _side_ends(xor, side)
        chain = xor_chain(xor, side)
        seg = chain[0] if u == start else chain[-1]
        x, y = seg[1], seg[2]
        return self.end_edge(G, u, y if x == u else x)

    def uses(self, G: UndirectedGraph, cycle: FrozenSet[int], u: int, v: int) -> bool:
        return self.end_edge(G, u, v) in cycle and self.end_edge(G, v, u) in cycle

    def records(self) -> List[GadgetRecord]:
        return [h.record() for h in self.all()]


def add_xor(
    b: GraphBuilder,
    registry: GadgetRegistry,
    name: str,
    e: Tuple[int, int],
    f: Tuple[int, int],
    city_scale: Tuple[int, int] = (1, 1),
) -> GadgetHandle:
    """XOR the logical pairs e and f.

    The pair f is oriented so that its endpoint v lies on the side of a
    (mirrored when needed), which keeps the graph bipartite.
    """
    t_c, h_c = city_scale
    a, bb = registry.representative(b.has_edge, *e)
    f0, f1 = registry.representative(b.has_edge, *f)
    if frozenset((a, bb)) == frozenset((f0, f1)):
        raise EdgeNotFound("an XOR needs two different edges")
    side_a = b.side(a)
    if side_a is not None and b.side(f1) is not side_a:
        u, v, mirrored = f1, f0, 1
    else:
        u, v, mirrored = f0, f1, 0
    b.remove_edge(a, bb)
    b.remove_edge(u, v)
    roles: Dict[str, int] = {"a": a, "b": bb, "u": u, "v": v}
    for role, vert in roles.items():
        b.tag(vert, RoleTag(name, role))
    side = side_a
    for i in range(1, 5):
        side = side.opposite if side is not None else None
        roles[f"p_{i}"] = _new(b, name, f"p_{i}", side)
        roles[f"q_{i}"] = _new(b, name, f"q_{i}", side.opposite if side is not None else None)
    b.add_path(a, roles["p_1"], roles["p_2"], roles["p_3"], roles["p_4"], bb)
    b.add_path(u, roles["q_1"], roles["q_2"], roles["q_3"], roles["q_4"], v)
    cities = [add_city(b, f"{name}/C{i}", roles[f"p_{i}"], roles[f"q_{i}"], t_c, h_c) for i in range(1, 5)]
    handle = GadgetHandle(GadgetKind.XOR, name, {"t_c": t_c, "h_c": h_c, "mirrored": mirrored}, roles, cities)
    b.register(handle.record())
    registry.logical[frozenset((a, bb))] = (handle, "ab")
    registry.logical[frozenset((u, v))] = (handle, "uv")
    log.debug("xor %s on %s/%s (mirrored=%d)", name, (a, bb), (u, v), mirrored)
    return handle


FORALL_PLAIN_EDGES: Tuple[RolePair, ...] = (
    ("v_out", "x_1"), ("v_out", "x_5"), ("x_1", "x_8"), ("x_5", "x_4"), ("x_2", "x_3"), ("x_6", "x_7"),
    ("x_4", "x_9"), ("x_8", "x_9"), ("x_9", "x_10"), ("x_10", "u_in"), ("x_10", "w_in"),
)


def add_forall(
    b: GraphBuilder,
    registry: GadgetRegistry,
    name: str,
    v_out: int,
    u_in: int,
    w_in: int,
    t: int,
    city_scale: Tuple[int, int] = (1, 1),
) -> GadgetHandle:
    """Forall gadget on (v_out, u_in, w_in) with t ladders.

    x_i sits on the side of v_out for even i and opposite for odd i.
    """
    if t < 1:
        raise ScaleInvalid(f"a forall gadget needs t >= 1 ladders, got {t}")
    t_c, h_c = city_scale
    s = b.side(v_out)
    for end in (u_in, w_in):
        if s is not None and b.side(end) is s:
            raise NotBipartite(f"forall {name}: u_in and w_in must lie opposite to v_out")
    roles: Dict[str, int] = {"v_out": v_out, "u_in": u_in, "w_in": w_in}
    for role, vert in roles.items():
        b.tag(vert, RoleTag(name, role))
    for i in range(1, 11):
        side = (s if i % 2 == 0 else s.opposite) if s is not None else None
        roles[f"x_{i}"] = _new(b, name, f"x_{i}", side)
    children: List[GadgetHandle] = [
        add_city(b, f"{name}/C{i}{i + 1}", roles[f"x_{i}"], roles[f"x_{i + 1}"], t_c, h_c) for i in (1, 3, 5, 7)
    ]
    for r1, r2 in FORALL_PLAIN_EDGES:
        b.add_edge(roles[r1], roles[r2])
    x = roles
    children.append(add_xor(b, registry, f"{name}/X1", (x["x_2"], x["x_3"]), (x["x_6"], x["x_7"]), city_scale))
    children.append(add_xor(b, registry, f"{name}/X2", (x["x_2"], x["x_3"]), (x["x_10"], x["u_in"]), city_scale))
    children.append(add_xor(b, registry, f"{name}/X3", (x["x_6"], x["x_7"]), (x["x_10"], x["w_in"]), city_scale))
    for j in range(1, t + 1):
        portals = {"a_6": x["x_2"], "b_6": x["x_3"], "a_0": x["x_6"], "b_0": x["x_7"]}
        children.append(add_ladder(b, f"{name}/L{j}", portals))
    handle = GadgetHandle(GadgetKind.FORALL, name, {"t": t, "t_c": t_c, "h_c": h_c}, roles, children)
    b.register(handle.record())
    return handle


def forall_chain(handle: GadgetHandle, top: bool) -> List[Segment]:
    """Traversal of a forall gadget in top (x_10 u_in) or bottom (x_10 w_in) state.

    ("ladder",) marks where the visited ladder's path goes: from x_2 to x_3
    in the top state, from x_6 to x_7 in the bottom state.
    """
    r = handle.roles
    c = handle.of_kind(GadgetKind.CITY)
    if top:
        middle12: Segment = ("ladder",)
        middle56: Segment = ("pair", r["x_6"], r["x_7"])
        exit_pair: Segment = ("pair", r["x_10"], r["u_in"])
    else:
        middle12 = ("pair", r["x_2"], r["x_3"])
        middle56 = ("ladder",)
        exit_pair = ("pair", r["x_10"], r["w_in"])
    return [
        ("pair", r["v_out"], r["x_1"]), ("city", c[0]), middle12, ("city", c[1]),
        ("pair", r["x_4"], r["x_5"]), ("city", c[2]), middle56, ("city", c[3]),
        ("pair", r["x_8"], r["x_9"]), ("pair", r["x_9"], r["x_10"]), exit_pair,
    ]


# -- standalone constructors ---------------------------------------------------
def build_tower(h: int) -> Tuple[BipartiteGraph, GadgetHandle]:
    b = GraphBuilder()
    handle = add_tower(b, "T", h)
    return b.build(), handle


def build_city(t_c: int, h_c: int) -> Tuple[BipartiteGraph, GadgetHandle]:
    b = GraphBuilder()
    x = b.add_vertex("x", Side.LEFT)
    y = b.add_vertex("y", Side.RIGHT)
    handle = add_city(b, "C", x, y, t_c, h_c)
    return b.build(), handle


def build_ladder() -> Tuple[BipartiteGraph, GadgetHandle]:
    b = GraphBuilder()
    handle = add_ladder(b, "L")
    return b.build(), handle


def insert_xor(
    G: UndirectedGraph,
    e: int,
    f: int,
    city_scale: Tuple[int, int] = (1, 1),
    name: str = "X",
) -> Tuple[UndirectedGraph, GadgetHandle]:
    """Copy of G with an XOR gadget on the edges e and f."""
    if e == f:
        raise EdgeNotFound("an XOR needs two different edges")
    for idx in (e, f):
        if not (0 <= idx < G.num_edges):
            raise EdgeNotFound(f"edge index {idx} not in the graph")
    b = GraphBuilder(G)
    registry = GadgetRegistry()
    handle = registry.add(add_xor(b, registry, name, G.edges[e], G.edges[f], city_scale))
    graph = b.build() if isinstance(G, BipartiteGraph) else b.build_undirected()
    return graph, handle


def build_forall(t: int, city_scale: Tuple[int, int] = (1, 1)) -> Tuple[BipartiteGraph, GadgetHandle]:
    b = GraphBuilder()
    v_out = b.add_vertex("v_out", Side.RIGHT)
    u_in = b.add_vertex("u_in", Side.LEFT)
    w_in = b.add_vertex("w_in", Side.LEFT)
    handle = add_forall(b, GadgetRegistry(), "A", v_out, u_in, w_in, t, city_scale)
    return b.build(), handle


# -- states --------------------------------------------------------------------
class StateLabel(Enum):
    DEFAULT = "default"
    LOCKED = "locked"
    SEMI_DEFAULT = "semi_default"
    TOP_OPEN = "top_open"
    BOTTOM_OPEN = "bottom_open"
    MATCHED = "matched"
    OTHER = "other"


@dataclass(frozen=True)
class GadgetState:
    """Label plus, for towers and ladders, the matched rung indices H(M)."""

    label: StateLabel
    semi_default: bool
    horizontals: FrozenSet[int] = frozenset()

    def __str__(self) -> str:
        rungs = ",".join(str(i) for i in sorted(self.horizontals))
        return f"{self.label.value}[{rungs}]"


LADDER_BOTTOM_OPEN = (("a_5", "b_5"), ("a_4", "a_3"), ("b_4", "b_3"), ("a_2", "a_1"), ("b_2", "b_1"))
LADDER_TOP_OPEN = (("a_5", "a_4"), ("b_5", "b_4"), ("a_3", "a_2"), ("b_3", "b_2"), ("a_1", "b_1"))


def _has(G: UndirectedGraph, h: GadgetHandle, matched: FrozenSet[int], r1: str, r2: str) -> bool:
    return role_edge(G, h, r1, r2) in matched


def classify_state(handle: GadgetHandle, M: PerfectMatching) -> GadgetState:
    G = M.graph
    _check_owner(G, handle)
    m = M.edge_set
    if handle.kind is GadgetKind.TOWER:
        h = handle.params["h"]
        rungs = frozenset(i for i in range(h + 1) if _has(G, handle, m, f"a_{i}", f"b_{i}"))
        semi = _has(G, handle, m, "v", "a_0") and _has(G, handle, m, "b_0", "w")
        if semi and rungs == frozenset(range(1, h + 1)):
            return GadgetState(StateLabel.DEFAULT, True, rungs)
        if (
            semi
            and h >= 2
            and _has(G, handle, m, f"a_{h}", f"a_{h - 1}")
            and _has(G, handle, m, f"b_{h}", f"b_{h - 1}")
            and rungs == frozenset(range(1, h - 1))
        ):
            return GadgetState(StateLabel.LOCKED, True, rungs)
        return GadgetState(StateLabel.SEMI_DEFAULT if semi else StateLabel.OTHER, semi, rungs)

    if handle.kind is GadgetKind.LADDER:
        rungs = frozenset(i for i in range(1, 6) if _has(G, handle, m, f"a_{i}", f"b_{i}"))
        semi = not any(
            _has(G, handle, m, r1, r2) for r1, r2 in (("a_0", "a_1"), ("b_0", "b_1"), ("a_5", "a_6"), ("b_5", "b_6"))
        )
        if not semi:
            return GadgetState(StateLabel.OTHER, False, rungs)
        if rungs == frozenset(range(1, 6)):
            return GadgetState(StateLabel.DEFAULT, True, rungs)
        if all(_has(G, handle, m, r1, r2) for r1, r2 in LADDER_BOTTOM_OPEN):
            return GadgetState(StateLabel.BOTTOM_OPEN, True, rungs)
        if all(_has(G, handle, m, r1, r2) for r1, r2 in LADDER_TOP_OPEN):
            return GadgetState(StateLabel.TOP_OPEN, True, rungs)
        return GadgetState(StateLabel.SEMI_DEFAULT, True, rungs)

    if handle.kind is GadgetKind.CITY:
        first = handle.children[0]
        matched = _has(G, first, m, "v", "a_0")
        return GadgetState(StateLabel.MATCHED if matched else StateLabel.OTHER, matched)

    if handle.kind is GadgetKind.XOR:
        semi = all(classify_state(c, M).semi_default for c in handle.of_kind(GadgetKind.CITY))
        return GadgetState(StateLabel.SEMI_DEFAULT if semi else StateLabel.OTHER, semi)

    # forall
    semi = (
        all(classify_state(c, M).semi_default for c in handle.of_kind(GadgetKind.CITY))
        and all(classify_state(x, M).semi_default for x in handle.of_kind(GadgetKind.XOR))
        and _has(G, handle, m, "x_9", "x_10")
    )
    return GadgetState(StateLabel.SEMI_DEFAULT if semi else StateLabel.OTHER, semi)


def city_parity_consistent(handle: GadgetHandle, M: PerfectMatching) -> bool:
    """Entry edge matched <=> every tower semi-default (and never only some)."""
    first = classify_state(handle, M).semi_default
    towers = [classify_state(t, M).semi_default for t in handle.children]
    return first == all(towers) and (all(towers) or not any(towers))


# -- cycle classification ------------------------------------------------------
class Verdict(Enum):
    NOT_VISITING = "not_visiting"
    WELL_BEHAVED = "well_behaved"
    ILL_BEHAVED = "ill_behaved"
    TOP_STATE = "top_state"
    BOTTOM_STATE = "bottom_state"
    IRREGULAR = "irregular"


class Direction(Enum):
    TOP = "t"
    BOTTOM = "b"


@dataclass(frozen=True)
class CycleClassification:
    gadget: str
    verdict: Verdict
    direction: Optional[Direction] = None
    ladders: Tuple[int, ...] = ()
    parts: Tuple["CycleClassification", ...] = ()
    uses: Optional[str] = None


def _tower_path_ok(G: UndirectedGraph, handle: GadgetHandle, restricted: Set[int]) -> bool:
    deg: Dict[int, int] = {}
    for e in restricted:
        for x in G.edges[e]:
            deg[x] = deg.get(x, 0) + 1
    v, w = handle.roles["v"], handle.roles["w"]
    ends = sorted(x for x, d in deg.items() if d == 1)
    if ends != sorted((v, w)):
        return False
    # walk from v; a single v-w path covers every restricted edge
    seen = 0
    prev_edge = None
    cur = v
    while cur != w:
        nxt = [e for e in G.incident(cur) if e in restricted and e != prev_edge]
        if len(nxt) != 1:
            return False
        prev_edge = nxt[0]
        cur = G.other(prev_edge, cur)
        seen += 1
    return seen == len(restricted)


def classify_cycle(
    handle: GadgetHandle,
    C: Iterable[int],
    M: Optional[PerfectMatching] = None,
    graph: Optional[UndirectedGraph] = None,
    registry: Optional[GadgetRegistry] = None,
) -> CycleClassification:
    """Verdict of the single cycle C on one gadget.

    The graph comes from M when given. Forall verdicts need the registry that
    resolves the gadget's logical pairs.
    """
    G = graph if graph is not None else (M.graph if M is not None else None)
    if G is None:
        raise ValueError("classify_cycle needs the matching or the graph")
    cycle = frozenset(C)
    if single_cycle_vertices(G, cycle) is None:
        raise NotACycle(f"edge set is not a single cycle of {G!r}")
    _check_owner(G, handle)
    return _classify(G, handle, cycle, registry)


def _classify(
    G: UndirectedGraph, handle: GadgetHandle, cycle: FrozenSet[int], registry: Optional[GadgetRegistry]
) -> CycleClassification:
    kind = handle.kind
    if kind is GadgetKind.TOWER:
        restricted = set(gadget_edges(G, handle)) & cycle
        if not restricted:
            return CycleClassification(handle.name, Verdict.NOT_VISITING)
        ok = restricted != cycle and _tower_path_ok(G, handle, restricted)
        return CycleClassification(handle.name, Verdict.WELL_BEHAVED if ok else Verdict.ILL_BEHAVED)

    if kind is GadgetKind.LADDER:
        inner = {handle.roles[f"{c}_{i}"] for c in "ab" for i in range(1, 6)}
        if not any(x in inner for e in cycle for x in G.edges[e]):
            return CycleClassification(handle.name, Verdict.NOT_VISITING)
        top = all(role_edge(G, handle, r1, r2) in cycle for r1, r2 in (("a_5", "a_6"), ("b_5", "b_6")))
        bottom = all(role_edge(G, handle, r1, r2) in cycle for r1, r2 in (("a_0", "a_1"), ("b_0", "b_1")))
        touched = [
            role_edge(G, handle, r1, r2) in cycle
            for r1, r2 in (("a_5", "a_6"), ("b_5", "b_6"), ("a_0", "a_1"), ("b_0", "b_1"))
        ]
        if top and sum(touched) == 2:
            return CycleClassification(handle.name, Verdict.WELL_BEHAVED, Direction.TOP)
        if bottom and sum(touched) == 2:
            return CycleClassification(handle.name, Verdict.WELL_BEHAVED, Direction.BOTTOM)
        return CycleClassification(handle.name, Verdict.ILL_BEHAVED)

    if kind is GadgetKind.CITY:
        first = handle.children[0]
        if role_edge(G, first, "v", "a_0") not in cycle:
            return CycleClassification(handle.name, Verdict.NOT_VISITING)
        parts = tuple(_classify(G, t, cycle, registry) for t in handle.children)
        ok = all(p.verdict is Verdict.WELL_BEHAVED for p in parts)
        return CycleClassification(handle.name, Verdict.WELL_BEHAVED if ok else Verdict.ILL_BEHAVED, parts=parts)

    if kind is GadgetKind.XOR:
        cities = [_classify(G, c, cycle, registry) for c in handle.of_kind(GadgetKind.CITY)]
        if all(c.verdict is Verdict.NOT_VISITING for c in cities):
            return CycleClassification(handle.name, Verdict.NOT_VISITING, parts=tuple(cities))
        reg = registry or _local_registry(handle)
        r = handle.roles
        ab = reg.uses(G, cycle, r["a"], r["b"])
        uv = reg.uses(G, cycle, r["u"], r["v"])
        visited_all = all(c.verdict is not Verdict.NOT_VISITING for c in cities)
        if visited_all and ab != uv:
            return CycleClassification(
                handle.name, Verdict.WELL_BEHAVED, parts=tuple(cities), uses="ab" if ab else "uv"
            )
        return CycleClassification(handle.name, Verdict.ILL_BEHAVED, parts=tuple(cities))

    # forall
    if registry is None:
        raise ValueError("forall classification needs the gadget registry")
    ladders = handle.of_kind(GadgetKind.LADDER)
    parts = tuple(_classify(G, lad, cycle, registry) for lad in ladders)
    visited = tuple(i for i, p in enumerate(parts) if p.verdict is not Verdict.NOT_VISITING)
    own = {v for v in handle.roles.values()}
    own |= {v for child in handle.walk() for v in child.roles.values()}
    if not any(x in own for e in cycle for x in G.edges[e]):
        return CycleClassification(handle.name, Verdict.NOT_VISITING, parts=parts)
    r = handle.roles
    cities = [h for h in handle.walk() if h.kind is GadgetKind.CITY]
    all_cities = all(role_edge(G, c.children[0], "v", "a_0") in cycle for c in cities)
    uses_u = registry.uses(G, cycle, r["x_10"], r["u_in"])
    uses_w = registry.uses(G, cycle, r["x_10"], r["w_in"])
    if all_cities and uses_u != uses_w and len(visited) == 1:
        direction = parts[visited[0]].direction
        wanted = Direction.TOP if uses_u else Direction.BOTTOM
        if parts[visited[0]].verdict is Verdict.WELL_BEHAVED and direction is wanted:
            verdict = Verdict.TOP_STATE if uses_u else Verdict.BOTTOM_STATE
            return CycleClassification(handle.name, verdict, direction, visited, parts)
    return CycleClassification(handle.name, Verdict.IRREGULAR, None, visited, parts)


def _local_registry(xor: GadgetHandle) -> GadgetRegistry:
    reg = GadgetRegistry()
    reg.logical[frozenset((xor.roles["a"], xor.roles["b"]))] = (xor, "ab")
    reg.logical[frozenset((xor.roles["u"], xor.roles["v"]))] = (xor, "uv")
    return reg


def city_entry_edges(G: UndirectedGraph, registry: GadgetRegistry) -> List[int]:
    return [role_edge(G, c.children[0], "v", "a_0") for c in registry.cities()]


def is_regular(G: UndirectedGraph, registry: GadgetRegistry, C: Iterable[int]) -> bool:
    """True when C visits every registered city (uses every entry edge)."""
    cycle = frozenset(C)
    return all(e in cycle for e in city_entry_edges(G, registry))


# -- harnesses -----------------------------------------------------------------
@dataclass
class Harness:
    """A gadget closed off so that its well-behaved visits are cycles."""

    graph: BipartiteGraph
    handle: GadgetHandle
    registry: GadgetRegistry
    closures: Dict[str, int] = field(default_factory=dict)

    def matching(self, role_pairs: Iterable[RolePair], extra: Iterable[Tuple[str, str]] = ()) -> PerfectMatching:
        """Perfect matching from gadget role pairs plus closure vertex-id pairs."""
        G = self.graph
        edges = [role_edge(G, self.handle, r1, r2) for r1, r2 in role_pairs]
        edges += [G.edge_index(G.index_of_id(u), G.index_of_id(v)) for u, v in extra]
        return PerfectMatching.of(G, edges)

    def role_pairs(self, edges: Iterable[int]) -> List[RolePair]:
        """Gadget-internal role pairs of an edge set (closure edges dropped)."""
        by_vertex = {v: r for r, v in self.handle.roles.items()}
        table = {frozenset(p) for p in edge_roles(self.handle)}
        pairs = []
        for e in sorted(edges):
            u, v = self.graph.edges[e]
            if u in by_vertex and v in by_vertex:
                pair = (by_vertex[u], by_vertex[v])
                if frozenset(pair) in table:
                    pairs.append(pair)
        return pairs


def tower_harness(h: int) -> Harness:
    b = GraphBuilder()
    handle = add_tower(b, "T", h)
    b.add_edge(handle.roles["w"], handle.roles["v"])
    graph = b.build()
    reg = GadgetRegistry()
    reg.add(handle)
    return Harness(graph, handle, reg, {"loop": graph.edge_index(handle.roles["w"], handle.roles["v"])})


def tower_state_pairs(h: int, label: StateLabel) -> List[RolePair]:
    """Role pairs of the default or locked tower matching."""
    pairs: List[RolePair] = [("v", "a_0"), ("b_0", "w")]
    if label is StateLabel.DEFAULT:
        pairs += [(f"a_{i}", f"b_{i}") for i in range(1, h + 1)]
    elif label is StateLabel.LOCKED:
        if h < 2:
            raise ScaleInvalid("a locked tower needs height >= 2")
        pairs += [(f"a_{i}", f"b_{i}") for i in range(1, h - 1)]
        pairs += [(f"a_{h}", f"a_{h - 1}"), (f"b_{h}", f"b_{h - 1}")]
    else:
        raise ValueError(f"no canonical tower matching for {label}")
    return pairs


def ladder_harness() -> Harness:
    b = GraphBuilder()
    handle = add_ladder(b, "L")
    r = handle.roles
    t1 = b.add_vertex("t1", b.side(r["a_6"]).opposite)  # type: ignore[union-attr]
    t2 = b.add_vertex("t2", b.side(r["a_6"]))
    s1 = b.add_vertex("s1", b.side(r["a_0"]).opposite)  # type: ignore[union-attr]
    s2 = b.add_vertex("s2", b.side(r["a_0"]))
    b.add_path(r["a_6"], t1, t2, r["b_6"])
    b.add_path(r["a_0"], s1, s2, r["b_0"])
    graph = b.build()
    reg = GadgetRegistry()
    reg.add(handle)
    return Harness(graph, handle, reg, {"top": graph.edge_index(t1, t2), "bottom": graph.edge_index(s1, s2)})


LADDER_CLOSURE_MATCHED = (("L.a_6", "t1"), ("t2", "L.b_6"), ("L.a_0", "s1"), ("s2", "L.b_0"))


def ladder_state_pairs(horizontals: Iterable[int]) -> List[RolePair]:
    """Inner ladder matching with the given matched rungs (closure edges excluded)."""
    H = set(horizontals)
    pairs: List[RolePair] = []
    i = 1
    while i <= 5:
        if i in H:
            pairs.append((f"a_{i}", f"b_{i}"))
            i += 1
        elif i + 1 <= 5 and i + 1 not in H:
            pairs += [(f"a_{i}", f"a_{i + 1}"), (f"b_{i}", f"b_{i + 1}")]
            i += 2
        else:
            raise StateNotSemiDefault(f"rung set {sorted(H)} is not a semi-default ladder state")
    return pairs


def ladder_state_matching(harness: Harness, horizontals: Iterable[int]) -> PerfectMatching:
    return harness.matching(ladder_state_pairs(horizontals), LADDER_CLOSURE_MATCHED)


def _tower_rungs(harness: Harness, M: PerfectMatching) -> FrozenSet[int]:
    return classify_state(harness.handle, M).horizontals


def harness_moves(harness: Harness, M: PerfectMatching) -> List[Tuple[str, Cycle, PerfectMatching]]:
    """Well-behaved flips available from M as (direction, cycle, result).

    Tower: cycles through the loop edge w v (direction ""). Ladder: cycles
    through exactly one of the two closure paths ("t" or "b").
    """
    out = []
    base = M.edge_set
    for cycle in neighbor_cycles(M):
        if harness.handle.kind is GadgetKind.TOWER:
            if harness.closures["loop"] not in cycle:
                continue
            direction = ""
        else:
            top = harness.closures["top"] in cycle
            bottom = harness.closures["bottom"] in cycle
            if top == bottom:
                continue
            direction = "t" if top else "b"
        nxt = PerfectMatching(tuple(sorted(base.symmetric_difference(cycle))), M.graph_hash, M.graph)
        if harness.handle.kind is GadgetKind.TOWER:
            before, after = _tower_rungs(harness, M), _tower_rungs(harness, nxt)
            if len(before.symmetric_difference(after)) != 1:
                raise InvariantViolation(
                    f"well-behaved flip changed rungs {sorted(before)} -> {sorted(after)}"
                )
        out.append((direction, cycle, nxt))
    out.sort(key=lambda item: (item[0], item[2].edges))
    return out


@dataclass(frozen=True)
class WellBehavedResult:
    length: int
    sequence: FlipSequence
    directions: str
    all_directions: FrozenSet[str]
    explored: int


def min_well_behaved_sequence(
    harness: Harness, start: PerfectMatching, goal: PerfectMatching, max_len: int = 64
) -> WellBehavedResult:
    """Shortest sequence of well-behaved flips from start to goal.

    Layered BFS; besides one witness it collects the direction strings of all
    shortest sequences.
    """
    if start == goal:
        return WellBehavedResult(0, FlipSequence(start), "", frozenset({""}), 1)
    dist = {start: 0}
    parent: Dict[PerfectMatching, Tuple[PerfectMatching, Cycle, str]] = {}
    dirs: Dict[PerfectMatching, Set[str]] = {start: {""}}
    layer = [start]
    depth = 0
    while layer and depth < max_len:
        depth += 1
        nxt_layer: List[PerfectMatching] = []
        for cur in layer:
            for d, cycle, nxt in harness_moves(harness, cur):
                if nxt not in dist:
                    dist[nxt] = depth
                    parent[nxt] = (cur, cycle, d)
                    dirs[nxt] = set()
                    nxt_layer.append(nxt)
                if dist[nxt] == depth:
                    dirs[nxt].update(s + d for s in dirs[cur])
        if goal in dist:
            cycles: List[Cycle] = []
            node = goal
            chars: List[str] = []
            while node != start:
                prev, cycle, d = parent[node]
                cycles.append(cycle)
                chars.append(d)
                node = prev
            seq = FlipSequence(start, tuple(reversed(cycles)))
            return WellBehavedResult(depth, seq, "".join(reversed(chars)), frozenset(dirs[goal]), len(dist))
        layer = nxt_layer
    raise Unreached(f"goal not reached within {max_len} well-behaved flips")


def tower_idle_cycle(harness: Harness) -> Cycle:
    """v a_0 b_0 w v: alternating in every semi-default tower state."""
    G, h = harness.graph, harness.handle
    return frozenset(
        [role_edge(G, h, "v", "a_0"), role_edge(G, h, "a_0", "b_0"), role_edge(G, h, "b_0", "w"), harness.closures["loop"]]
    )


def tower_transfer_sequence(harness: Harness, start: PerfectMatching, goal: PerfectMatching) -> FlipSequence:
    """Well-behaved sequence of length exactly 2h between semi-default states.

    The shortest sequence is padded at the end with idle pairs.
    """
    h = harness.handle.params["h"]
    for state in (start, goal):
        if not classify_state(harness.handle, state).semi_default:
            raise StateNotSemiDefault("tower transfer needs semi-default end states")
    best = min_well_behaved_sequence(harness, start, goal, max_len=2 * h)
    pad = 2 * h - best.length
    if pad % 2:
        raise InvariantViolation(f"odd padding {pad} between semi-default tower states")
    idle = tower_idle_cycle(harness)
    return FlipSequence(start, best.sequence.cycles + (idle,) * pad)


def semi_default_tower_matchings(harness: Harness) -> List[PerfectMatching]:
    return [
        m for m in enumerate_perfect_matchings(harness.graph, cap=100_000)
        if classify_state(harness.handle, m).semi_default
    ]


# -- ladder transfer graph -----------------------------------------------------
@dataclass(frozen=True)
class TransferEdge:
    source: FrozenSet[int]
    target: FrozenSet[int]
    label: str  # "2t" or "2b"
    cycles: Tuple[Cycle, Cycle]


@dataclass
class TransferGraph:
    harness: Harness
    states: List[FrozenSet[int]]
    edges: Dict[Tuple[FrozenSet[int], FrozenSet[int], str], TransferEdge]

    def successors(self, H: FrozenSet[int]) -> List[TransferEdge]:
        out = [e for (s, _, _), e in self.edges.items() if s == H]
        return sorted(out, key=lambda e: (e.label != "2t", sorted(e.target)))

    def distances(self, H: FrozenSet[int]) -> Dict[FrozenSet[int], int]:
        dist = {H: 0}
        queue = deque([H])
        while queue:
            cur = queue.popleft()
            for e in self.successors(cur):
                if e.target not in dist:
                    dist[e.target] = dist[cur] + 1
                    queue.append(e.target)
        return dist

    def diameter(self) -> int:
        worst = 0
        for H in self.states:
            dist = self.distances(H)
            if len(dist) != len(self.states):
                raise InvariantViolation("ladder transfer graph is not strongly connected")
            worst = max(worst, max(dist.values()))
        return worst

    def labels(self) -> Set[str]:
        return {e.label for e in self.edges.values()}


_TRANSFER_CACHE: Dict[str, TransferGraph] = {}


def ladder_transfer_graph() -> TransferGraph:
    """Semi-default ladder states joined by pairs of same-direction visits."""
    if "ladder" in _TRANSFER_CACHE:
        return _TRANSFER_CACHE["ladder"]
    harness = ladder_harness()
    semi = {
        classify_state(harness.handle, m).horizontals: m
        for m in enumerate_perfect_matchings(harness.graph, cap=100_000)
        if classify_state(harness.handle, m).semi_default
    }
    edges: Dict[Tuple[FrozenSet[int], FrozenSet[int], str], TransferEdge] = {}
    for H in sorted(semi, key=sorted):
        M = semi[H]
        for d in ("t", "b"):
            for d1, c1, m1 in harness_moves(harness, M):
                if d1 != d:
                    continue
                for d2, c2, m2 in harness_moves(harness, m1):
                    if d2 != d:
                        continue
                    st = classify_state(harness.handle, m2)
                    if not st.semi_default:
                        continue
                    key = (H, st.horizontals, "2" + d)
                    edges.setdefault(key, TransferEdge(H, st.horizontals, "2" + d, (c1, c2)))
    graph = TransferGraph(harness, sorted(semi, key=lambda H: (-len(H), sorted(H))), edges)
    _TRANSFER_CACHE["ladder"] = graph
    return graph


def _state_key(state: Union[GadgetState, Iterable[int]]) -> FrozenSet[int]:
    if isinstance(state, GadgetState):
        if not state.semi_default:
            raise StateNotSemiDefault(f"ladder state {state} is not semi-default")
        return state.horizontals
    return frozenset(state)


def ladder_transfer_moves(
    state1: Union[GadgetState, Iterable[int]], state2: Union[GadgetState, Iterable[int]]
) -> List[Tuple[str, Cycle]]:
    """Four (direction, harness cycle) moves taking state1 to state2."""
    graph = ladder_transfer_graph()
    src, dst = _state_key(state1), _state_key(state2)
    for key in (src, dst):
        if key not in graph.states:
            raise StateNotSemiDefault(f"rung set {sorted(key)} is not a semi-default ladder state")
    # BFS over non-loop transfer edges, remembering the edge used
    back: Dict[FrozenSet[int], Optional[TransferEdge]] = {src: None}
    queue = deque([src])
    while queue and dst not in back:
        cur = queue.popleft()
        for e in graph.successors(cur):
            if e.target != cur and e.target not in back:
                back[e.target] = e
                queue.append(e.target)
    path: List[TransferEdge] = []
    node = dst
    while back[node] is not None:
        e = back[node]
        path.append(e)  # type: ignore[arg-type]
        node = e.source  # type: ignore[union-attr]
    path.reverse()
    while len(path) < 2:
        idle = graph.edges.get((dst, dst, "2t")) or graph.edges.get((dst, dst, "2b"))
        if idle is None:
            raise InvariantViolation(f"ladder state {sorted(dst)} has no idle visit pair")
        path.append(idle)
    if len(path) > 2:
        raise InvariantViolation(f"transfer {sorted(src)} -> {sorted(dst)} needs {len(path)} pairs")
    moves: List[Tuple[str, Cycle]] = []
    for e in path:
        moves += [(e.label[1], e.cycles[0]), (e.label[1], e.cycles[1])]
    return moves


def ladder_transfer_plan(state1: Union[GadgetState, Iterable[int]], state2: Union[GadgetState, Iterable[int]]) -> str:
    """Direction string of length 4 in {tt, bb}^2."""
    return "".join(d for d, _ in ladder_transfer_moves(state1, state2))


def enumerate_semi_default_ladder_states() -> List[GadgetState]:
    graph = ladder_transfer_graph()
    harness = graph.harness
    return [classify_state(harness.handle, ladder_state_matching(harness, H)) for H in graph.states]


# -- lemma checkers ------------------------------------------------------------
@dataclass
class LemmaVerdict:
    name: str
    passed: bool
    checked: int = 0
    violations: int = 0
    measurements: Dict[str, object] = field(default_factory=dict)
    counterexample: Optional[object] = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {
            "lemma": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "violations": self.violations,
            "measurements": self.measurements,
            "counterexample": self.counterexample,
            "detail": self.detail,
        }


def check_tower_lower_bound(h: int) -> LemmaVerdict:
    """Locked -> default takes exactly 2h - 2 well-behaved flips."""
    if h < 2:
        raise ScaleInvalid("the locked state needs height >= 2")
    harness = tower_harness(h)
    locked = harness.matching(tower_state_pairs(h, StateLabel.LOCKED))
    default = harness.matching(tower_state_pairs(h, StateLabel.DEFAULT))
    result = min_well_behaved_sequence(harness, locked, default, max_len=4 * h)
    passed = result.length == 2 * h - 2 and validate_flip_sequence(result.sequence).ok
    return LemmaVerdict(
        "tower-lower-bound",
        passed,
        checked=result.explored,
        violations=0 if passed else 1,
        measurements={"h": h, "min": result.length, "bound": 2 * h - 2},
        detail=f"locked -> default needs {result.length} well-behaved flips (2h-2 = {2 * h - 2})",
    )


def check_tower_upper_bound(h: int) -> LemmaVerdict:
    """Every pair of semi-default tower states is joined by exactly 2h well-behaved flips."""
    harness = tower_harness(h)
    states = semi_default_tower_matchings(harness)
    checked = violations = 0
    counterexample = None
    for start in states:
        for goal in states:
            seq = tower_transfer_sequence(harness, start, goal)
            res = validate_flip_sequence(seq)
            checked += 1
            if not (res.ok and res.final == goal and len(seq) == 2 * h):
                violations += 1
                counterexample = counterexample or {"start": list(start.edges), "goal": list(goal.edges)}
    return LemmaVerdict(
        "tower-upper-bound",
        violations == 0,
        checked=checked,
        violations=violations,
        measurements={"h": h, "states": len(states), "length": 2 * h},
        counterexample=counterexample,
    )


def check_city(t_c: int = 2, h_c: int = 2) -> LemmaVerdict:
    """Entry edge matched <=> all towers semi-default, over every matching of a closed city."""
    b = GraphBuilder()
    x = b.add_vertex("x", Side.LEFT)
    y = b.add_vertex("y", Side.RIGHT)
    city = add_city(b, "C", x, y, t_c, h_c)
    # x and y also get private partners so both parities occur
    xp = b.add_vertex("x'", Side.RIGHT)
    yp = b.add_vertex("y'", Side.LEFT)
    b.add_edge(x, xp)
    b.add_edge(y, yp)
    b.add_edge(xp, yp)
    G = b.build()
    checked = violations = 0
    for M in enumerate_perfect_matchings(G, cap=1_000_000):
        checked += 1
        if not city_parity_consistent(city, M):
            violations += 1
    return LemmaVerdict("city", violations == 0 and checked > 0, checked, violations, {"t_c": t_c, "h_c": h_c})


def check_ladder_states() -> LemmaVerdict:
    graph = ladder_transfer_graph()
    states = enumerate_semi_default_ladder_states()
    labels = [s.label for s in states]
    sizes = sorted(len(s.horizontals) for s in states)
    diameter = graph.diameter()
    passed = (
        len(states) == 8
        and set(sizes) <= {1, 3, 5}
        and labels.count(StateLabel.DEFAULT) == 1
        and labels.count(StateLabel.TOP_OPEN) == 1
        and labels.count(StateLabel.BOTTOM_OPEN) == 1
        and diameter == 2
        and graph.labels() <= {"2t", "2b"}
    )
    return LemmaVerdict(
        "ladder-states",
        passed,
        checked=len(states),
        violations=0 if passed else 1,
        measurements={
            "states": len(states),
            "transfer_diameter": diameter,
            "labels": sorted(graph.labels()),
            "states_detail": [str(s) for s in states],
        },
    )


def check_ladder_necessary() -> LemmaVerdict:
    """Bottom-open -> default takes 4 bottom visits; top-open -> default 4 top visits."""
    harness = ladder_harness()
    default = ladder_state_matching(harness, range(1, 6))
    bottom_open = harness.matching(LADDER_BOTTOM_OPEN, LADDER_CLOSURE_MATCHED)
    top_open = harness.matching(LADDER_TOP_OPEN, LADDER_CLOSURE_MATCHED)
    down = min_well_behaved_sequence(harness, bottom_open, default, max_len=8)
    up = min_well_behaved_sequence(harness, top_open, default, max_len=8)
    passed = (
        down.length == 4 and down.all_directions == {"bbbb"} and up.length == 4 and up.all_directions == {"tttt"}
    )
    return LemmaVerdict(
        "ladder-necessary",
        passed,
        checked=down.explored + up.explored,
        violations=0 if passed else 1,
        measurements={
            "bottom_open_min": down.length,
            "bottom_open_directions": sorted(down.all_directions),
            "top_open_min": up.length,
            "top_open_directions": sorted(up.all_directions),
        },
    )


def xor_harness(city_scale: Tuple[int, int] = (1, 1), mirrored: bool = False) -> Tuple[BipartiteGraph, GadgetHandle]:
    """K_{3,3} with an XOR on two disjoint edges (second edge given reversed when mirrored)."""
    b = GraphBuilder()
    left = [b.add_vertex(f"l{i}", Side.LEFT) for i in range(3)]
    right = [b.add_vertex(f"r{i}", Side.RIGHT) for i in range(3)]
    for u in left:
        for v in right:
            b.add_edge(u, v)
    reg = GadgetRegistry()
    f = (right[1], left[1]) if mirrored else (left[1], right[1])
    handle = reg.add(add_xor(b, reg, "X", (left[0], right[0]), f, city_scale))
    return b.build(), handle


def check_xor_exclusivity(city_scale: Tuple[int, int] = (1, 1)) -> LemmaVerdict:
    """Regular cycles use exactly one of the two XORed edges."""
    checked = violations = total = 0
    counterexample = None
    for mirrored in (False, True):
        G, xor = xor_harness(city_scale, mirrored)
        reg = _local_registry(xor)
        reg.top.append(xor)
        entries = city_entry_edges(G, reg)
        index = {(min(u, v), max(u, v)): e for e, (u, v) in enumerate(G.edges)}
        for walk in nx.simple_cycles(G.to_networkx()):
            total += 1
            cycle = frozenset(index[canonical(walk[i], walk[(i + 1) % len(walk)])] for i in range(len(walk)))
            if not all(e in cycle for e in entries):
                continue
            checked += 1
            r = xor.roles
            if reg.uses(G, cycle, r["a"], r["b"]) == reg.uses(G, cycle, r["u"], r["v"]):
                violations += 1
                counterexample = counterexample or sorted(cycle)
    return LemmaVerdict(
        "xor-exclusivity",
        violations == 0 and checked > 0,
        checked,
        violations,
        {"simple_cycles": total, "regular_cycles": checked, "city_scale": list(city_scale)},
        counterexample,
    )


@dataclass
class ForallHarness:
    graph: BipartiteGraph
    handle: GadgetHandle
    registry: GadgetRegistry


def forall_harness(t: int, city_scale: Tuple[int, int] = (1, 1)) -> ForallHarness:
    """Forall gadget closed by z (to u_in, w_in), the edge z o and a city o -> v_out."""
    b = GraphBuilder()
    reg = GadgetRegistry()
    v_out = b.add_vertex("v_out", Side.RIGHT)
    u_in = b.add_vertex("u_in", Side.LEFT)
    w_in = b.add_vertex("w_in", Side.LEFT)
    z = b.add_vertex("z", Side.RIGHT)
    o = b.add_vertex("o", Side.LEFT)
    b.add_edge(u_in, z)
    b.add_edge(w_in, z)
    b.add_edge(z, o)
    reg.add(add_city(b, "O", o, v_out, *city_scale))
    handle = reg.add(add_forall(b, reg, "A", v_out, u_in, w_in, t, city_scale))
    return ForallHarness(b.build(), handle, reg)


def canonical_city_forbidden(G: UndirectedGraph, registry: GadgetRegistry) -> Set[int]:
    """Tower edges off the rung-0 path v a_0 b_0 w (cities become plain paths)."""
    banned: Set[int] = set()
    for tower in registry.towers():
        h = tower.params["h"]
        for r1, r2 in tower_edge_roles(h):
            if (r1, r2) not in (("v", "a_0"), ("b_0", "w"), ("a_0", "b_0")):
                banned.add(role_edge(G, tower, r1, r2))
    return banned


def regular_cycles(G: UndirectedGraph, registry: GadgetRegistry, canonical_cities: bool = True) -> List[Cycle]:
    forbidden = canonical_city_forbidden(G, registry) if canonical_cities else set()
    search = CycleSearch(G, spanning=False, required=city_entry_edges(G, registry), forbidden=forbidden)
    return list(search.solutions())


def check_forall(t: int = 2, city_scale: Tuple[int, int] = (1, 1)) -> LemmaVerdict:
    """Regular cycles are in top or bottom state, visiting one ladder from that side."""
    fh = forall_harness(t, city_scale)
    cycles = regular_cycles(fh.graph, fh.registry)
    violations = 0
    counterexample = None
    tally = {Verdict.TOP_STATE.value: 0, Verdict.BOTTOM_STATE.value: 0}
    for cycle in cycles:
        cls = classify_cycle(fh.handle, cycle, graph=fh.graph, registry=fh.registry)
        if cls.verdict in (Verdict.TOP_STATE, Verdict.BOTTOM_STATE):
            tally[cls.verdict.value] += 1
        else:
            violations += 1
            counterexample = counterexample or {"cycle": sorted(cycle), "ladders": list(cls.ladders)}
    return LemmaVerdict(
        "forall-gadget",
        violations == 0 and bool(cycles),
        len(cycles),
        violations,
        {"t": t, "regular_cycles": len(cycles), **tally},
        counterexample,
    )


LADDER_SPINE_ROLES: Tuple[RolePair, ...] = tuple(
    pair for pair in LADDER_EDGE_ROLES if pair not in (("a_2", "b_2"), ("a_3", "b_3"), ("a_4", "b_4"))
)


def damage_forbidden(G: UndirectedGraph, registry: GadgetRegistry, forall: GadgetHandle) -> Set[int]:
    """Cities cut to their rung-0 path, ladders to rails plus rungs 1 and 5.

    Every terminal linkage a city or ladder offers survives the cut, so the
    ladders a cycle can visit together are the same as in the full graph.
    """
    banned = canonical_city_forbidden(G, registry)
    for ladder in forall.of_kind(GadgetKind.LADDER):
        for r1, r2 in LADDER_EDGE_ROLES:
            if (r1, r2) not in LADDER_SPINE_ROLES:
                banned.add(role_edge(G, ladder, r1, r2))
    return banned


def check_damage(
    t: int = 5,
    city_scale: Tuple[int, int] = (1, 1),
    budget: int = 1_000_000,
    reduced: bool = True,
) -> LemmaVerdict:
    """No simple cycle visits more than 4 ladders of a forall gadget.

    Removing the four portals x_2, x_3, x_6, x_7 leaves every ladder's inner
    vertices as a component of its own, so each ladder visit spends two of
    the eight portal-edge slots. That is checked structurally, then every
    simple cycle of the harness is enumerated and its ladders counted. With
    ``reduced`` the search runs on the graph cut by damage_forbidden; the
    full graph has too many cycles past t = 2. BudgetExceeded is raised once
    more than ``budget`` cycles turn up.
    """
    fh = forall_harness(t, city_scale)
    G, handle = fh.graph, fh.handle
    r = handle.roles
    portals = {r["x_2"], r["x_3"], r["x_6"], r["x_7"]}
    g = G.to_networkx()
    g.remove_nodes_from(portals)
    components = [frozenset(c) for c in nx.connected_components(g)]
    violations = 0
    counterexample = None
    for ladder in handle.of_kind(GadgetKind.LADDER):
        inner = frozenset(ladder.roles[f"{c}_{i}"] for c in "ab" for i in range(1, 6))
        if inner not in components:
            violations += 1
            counterexample = counterexample or {"ladder": ladder.name, "reason": "not cut off by the portals"}
    attach = {p: sum(1 for e in G.incident(p) if G.other(e, p) not in portals) for p in portals}

    forbidden = damage_forbidden(G, fh.registry, handle) if reduced else set()
    search = CycleSearch(G, spanning=False, forbidden=forbidden)
    checked = 0
    histogram: Dict[int, int] = {}
    for cycle in search.solutions(limit=budget + 1):
        checked += 1
        if checked > budget:
            raise BudgetExceeded(budget, checked)
        visited = len(classify_cycle(handle, cycle, graph=G, registry=fh.registry).ladders)
        histogram[visited] = histogram.get(visited, 0) + 1
        if visited > 4:
            violations += 1
            counterexample = counterexample or {"cycle": sorted(cycle), "ladders": visited}
    log.debug("damage t=%d: %d cycles, %d search nodes", t, checked, search.nodes)
    return LemmaVerdict(
        "damage",
        violations == 0 and checked > 0,
        checked=checked,
        violations=violations,
        measurements={
            "t": t,
            "reduced": reduced,
            "portals": len(portals),
            "portal_degrees": sorted(attach.values()),
            "ladder_bound": 4,
            "max_visited": max(histogram, default=0),
            "by_ladders": {str(k): histogram[k] for k in sorted(histogram)},
        },
        counterexample=counterexample,
        detail="each ladder is separated from the rest by the four portals",
    )
