import json

import pytest

from matchinglab.GraphCore import BipartiteGraph, UndirectedGraph, Vertex
from matchinglab.GraphIO import export_graph, graph_to_dot, import_graph, read_overlay
from matchinglab.LabErrors import ParseError


def test_json_round_trip(c4):
    back = import_graph(export_graph(c4, "json"), "json")
    assert isinstance(back, BipartiteGraph)
    assert back == c4
    assert back.content_hash == c4.content_hash


def test_graphml_round_trip(k33):
    back = import_graph(export_graph(k33, "graphml"), "graphml")
    assert back == k33


def test_json_overlay_is_kept(c4):
    blob = export_graph(c4, "json", overlay=[0, 2])
    assert read_overlay(blob) == [0, 2]
    doc = json.loads(blob)
    assert doc["matching"]["graph_hash"] == c4.content_hash
    assert read_overlay(export_graph(c4, "json")) is None


def test_dot_lists_every_node(k33):
    text = export_graph(k33, "dot").decode("utf-8")
    assert text.startswith('graph "G" {')
    assert "digraph" not in text
    assert sum(1 for line in text.splitlines() if "[label=" in line) == 6
    assert text.count(" -- ") == 9


def test_dot_highlights_overlay(c4):
    text = graph_to_dot(c4, overlay=[1])
    assert text.count("penwidth=3") == 1


def test_sideless_vertices_import_as_undirected():
    G = UndirectedGraph([Vertex("a"), Vertex("b"), Vertex("c")], [(0, 1), (1, 2), (2, 0)])
    back = import_graph(export_graph(G, "json"))
    assert type(back) is UndirectedGraph
    assert back.num_edges == 3


@pytest.mark.parametrize(
    "blob",
    [
        b'{"vertices": [{"id": "a", "side": "L"}',
        b"[1, 2, 3]",
        b'{"vertices": [{"side": "L"}], "edges": []}',
    ],
)
def test_bad_json_raises_parse_error(blob):
    with pytest.raises(ParseError):
        import_graph(blob, "json")


def test_truncated_json_reports_position():
    with pytest.raises(ParseError) as info:
        import_graph(b'{"vertices": [\n', "json")
    assert info.value.line >= 1


def test_malformed_graphml():
    with pytest.raises(ParseError):
        import_graph("<graphml><graph>", "graphml")


def test_unknown_export_format(c4):
    with pytest.raises(ValueError):
        export_graph(c4, "svg")
