import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchinglab.GraphCore import (
    BipartiteGraph,
    DirectedGraph,
    GraphBuilder,
    RoleTag,
    Side,
    UndirectedGraph,
    Vertex,
    build_graph,
    is_bipartite_certificate,
    subdivide_edge,
)
from matchinglab.LabErrors import (
    DanglingEndpoint,
    DuplicateEdge,
    DuplicateVertex,
    EdgeNotFound,
    NotBipartite,
    ScaleInvalid,
    SelfLoop,
)


def test_c4_and_k33_sizes(c4, k33):
    assert (c4.num_vertices, c4.num_edges) == (4, 4)
    assert (k33.num_vertices, k33.num_edges) == (6, 9)
    assert c4.left() == [0, 2]
    assert c4.right() == [1, 3]


def test_triangle_is_rejected():
    with pytest.raises(NotBipartite):
        build_graph([("a", "L"), ("b", "R"), ("c", "L")], [(0, 1), (1, 2), (2, 0)])


def test_missing_side_is_rejected():
    with pytest.raises(NotBipartite):
        build_graph([("a", "L"), ("b", None)], [(0, 1)])


@pytest.mark.parametrize(
    "edges, error",
    [
        ([(0, 1), (1, 0)], DuplicateEdge),
        ([(0, 0)], SelfLoop),
        ([(0, 5)], DanglingEndpoint),
    ],
)
def test_malformed_edge_lists(edges, error):
    with pytest.raises(error):
        build_graph([("a", "L"), ("b", "R")], edges)


def test_duplicate_vertex_and_role():
    with pytest.raises(DuplicateVertex):
        build_graph([("a", "L"), ("a", "R")], [])
    with pytest.raises(DuplicateVertex):
        build_graph([("a", "L", ["T.v"]), ("b", "R", ["T.v"])], [])


def test_roles_resolve_to_one_vertex():
    G = build_graph([("a", "L", ["T.v"]), ("b", "R", ["T.w"])], [(0, 1)])
    assert G.vertex_of("T.w") == 1
    assert G.vertex_of(RoleTag("T", "v")) == 0
    with pytest.raises(KeyError):
        G.vertex_of("T.a_0")


def test_mapping_specs_and_lookup():
    G = build_graph([{"id": "x", "side": "Left"}, {"id": "y", "side": "Right"}], [(1, 0)])
    assert G.edges == ((0, 1),)
    assert G.edge_index(1, 0) == 0
    assert G.other(0, 0) == 1
    with pytest.raises(EdgeNotFound):
        G.edge_index(0, 0)


def test_content_hash_is_structural(c4):
    again = build_graph([(f"v{i}", "L" if i % 2 == 0 else "R") for i in range(4)],
                        [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert again == c4
    assert again.content_hash == c4.content_hash
    other = build_graph([(f"v{i}", "L" if i % 2 == 0 else "R") for i in range(4)], [(0, 1), (2, 3)])
    assert other.content_hash != c4.content_hash


def test_subdivide_even_keeps_bipartite(c4):
    result = subdivide_edge(c4, 0, 4)
    G = result.graph
    assert isinstance(G, BipartiteGraph)
    assert (G.num_vertices, G.num_edges) == (8, 8)
    assert not result.side_flip
    assert len(result.new_vertices) == 4
    assert is_bipartite_certificate(G).ok


def test_subdivide_odd_breaks_parity(c4):
    result = subdivide_edge(c4, 0, 1)
    assert result.side_flip
    assert not isinstance(result.graph, BipartiteGraph)
    cert = is_bipartite_certificate(result.graph)
    assert not cert.ok
    assert cert.verify(result.graph)
    assert len(cert.odd_walk) % 2 == 1


def test_subdivide_single_edge_gives_path():
    G = build_graph([("u", "L"), ("v", "R")], [(0, 1)])
    result = subdivide_edge(G, 0, 4)
    assert (result.graph.num_vertices, result.graph.num_edges) == (6, 5)
    assert sorted(result.graph.degree(v) for v in range(6)) == [1, 1, 2, 2, 2, 2]


def test_subdivide_rejects_bad_arguments(c4):
    with pytest.raises(EdgeNotFound):
        subdivide_edge(c4, 9, 2)
    with pytest.raises(ScaleInvalid):
        subdivide_edge(c4, 0, 0)


def test_certificate_colors_cycles(c4, c6):
    for G in (c4, c6):
        cert = is_bipartite_certificate(G)
        assert cert.ok
        assert cert.verify(G)
        assert all(cert.coloring[u] != cert.coloring[v] for u, v in G.edges)


def test_builder_subdivide_alternates_sides():
    b = GraphBuilder()
    u = b.add_vertex("u", Side.LEFT)
    v = b.add_vertex("v", Side.RIGHT)
    b.add_edge(u, v)
    fresh = b.subdivide(u, v, 2)
    assert [b.side(x) for x in fresh] == [Side.RIGHT, Side.LEFT]
    assert not b.has_edge(u, v)
    assert b.fresh_id("u") == "u'2"
    G = b.build()
    assert G.num_edges == 3


def test_directed_graph_lookup():
    H = DirectedGraph(3, [(0, 1), (1, 2), (2, 0)])
    assert H.find_arc(1, 2) == 1
    assert H.find_arc(2, 1) is None
    assert H.successors(0) == [1]
    assert (H.out_degree(0), H.in_degree(0)) == (1, 1)
    with pytest.raises(DuplicateEdge):
        DirectedGraph(2, [(0, 1), (0, 1)])
    with pytest.raises(EdgeNotFound):
        H.arc_index(0, 2)


@settings(max_examples=40, deadline=None)
@given(st.permutations(range(6)))
def test_relabeling_preserves_bipartiteness(perm):
    specs = [(f"l{i}", "L") for i in range(3)] + [(f"r{i}", "R") for i in range(3)]
    G = build_graph(specs, [(i, 3 + j) for i in range(3) for j in range(3) if i != j])
    R = G.relabeled(list(perm))
    assert isinstance(R, BipartiteGraph)
    assert R.num_edges == G.num_edges
    assert sorted(R.degree(v) for v in range(6)) == sorted(G.degree(v) for v in range(6))
    assert is_bipartite_certificate(R).verify(R)


def test_plain_undirected_graph_has_no_sides():
    G = UndirectedGraph([Vertex("a"), Vertex("b"), Vertex("c")], [(0, 1), (1, 2), (2, 0)])
    assert G.side(0) is None
    assert not is_bipartite_certificate(G).ok
