#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Graph codecs: JSON (round-trip format), DOT (rendering) and GraphML.

JSON schema::

    {"vertices": [{"id": "a", "side": "L", "roles": ["T1.v"]}, ...],
     "edges":    [[0, 1], ...],
     "gadgets":  [{"name": "T1", "kind": "tower", "params": {...}, "role_map": {...}}],
     "matching": {"edges": [...], "graph_hash": "..."}      (optional overlay)}

Vertices without a side import as a plain UndirectedGraph; otherwise the
result is a BipartiteGraph and the usual validation applies.
"""

from __future__ import annotations

import json
import logging
from typing import Iterable, Optional, Union

import xmltodict

from .GraphCore import BipartiteGraph, GadgetRecord, RoleTag, Side, UndirectedGraph, Vertex
from .LabErrors import ParseError

log = logging.getLogger(__name__)

FORMATS = ("json", "dot", "graphml")


def graph_to_dict(G: UndirectedGraph, overlay: Optional[Iterable[int]] = None) -> dict:
    data = {
        "vertices": [
            {
                "id": vert.id,
                "side": vert.side.value if vert.side else None,
                "roles": sorted(str(t) for t in vert.roles),
            }
            for vert in G.vertices
        ],
        "edges": [list(e) for e in G.edges],
        "gadgets": [
            {"name": g.name, "kind": g.kind, "params": dict(g.params), "role_map": dict(g.role_map)}
            for g in G.gadgets
        ],
    }
    if overlay is not None:
        data["matching"] = {"edges": sorted(overlay), "graph_hash": G.content_hash}
    return data


def graph_from_dict(data: dict) -> UndirectedGraph:
    try:
        verts = [
            Vertex(
                str(spec["id"]),
                Side.parse(spec.get("side")),
                frozenset(RoleTag.parse(r) for r in spec.get("roles", ())),
            )
            for spec in data["vertices"]
        ]
        edges = [(int(u), int(v)) for u, v in data["edges"]]
        gadgets = [
            GadgetRecord(
                str(g["name"]),
                str(g["kind"]),
                {str(k): int(v) for k, v in g.get("params", {}).items()},
                {str(k): int(v) for k, v in g.get("role_map", {}).items()},
            )
            for g in data.get("gadgets", ())
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"graph JSON does not follow the schema: {exc}") from exc
    if verts and all(v.side is not None for v in verts):
        return BipartiteGraph(verts, edges, gadgets)
    return UndirectedGraph(verts, edges, gadgets)


# -- DOT -----------------------------------------------------------------------
def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_to_dot(G: UndirectedGraph, overlay: Optional[Iterable[int]] = None, name: str = "G") -> str:
    matched = set(overlay or ())
    lines = [f"graph {_dot_quote(name)} {{", "  node [fontsize=10];"]
    for i, vert in enumerate(G.vertices):
        shape = {Side.LEFT: "box", Side.RIGHT: "ellipse"}.get(vert.side, "circle")
        lines.append(f"  n{i} [label={_dot_quote(vert.id)}, shape={shape}];")
    for e, (u, v) in enumerate(G.edges):
        style = " [style=bold, penwidth=3]" if e in matched else ""
        lines.append(f"  n{u} -- n{v}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- GraphML -------------------------------------------------------------------
def graph_to_graphml(G: UndirectedGraph, overlay: Optional[Iterable[int]] = None) -> str:
    matched = set(overlay or ())
    doc = {
        "graphml": {
            "@xmlns": "http://graphml.graphdrawing.org/xmlns",
            "key": [
                {"@id": "side", "@for": "node", "@attr.name": "side", "@attr.type": "string"},
                {"@id": "roles", "@for": "node", "@attr.name": "roles", "@attr.type": "string"},
                {"@id": "matched", "@for": "edge", "@attr.name": "matched", "@attr.type": "boolean"},
            ],
            "graph": {
                "@id": "G",
                "@edgedefault": "undirected",
                "node": [
                    {
                        "@id": vert.id,
                        "data": [
                            {"@key": "side", "#text": vert.side.value if vert.side else ""},
                            {"@key": "roles", "#text": " ".join(sorted(str(t) for t in vert.roles))},
                        ],
                    }
                    for vert in G.vertices
                ],
                "edge": [
                    {
                        "@id": f"e{e}",
                        "@source": G.vertices[u].id,
                        "@target": G.vertices[v].id,
                        "data": {"@key": "matched", "#text": "true" if e in matched else "false"},
                    }
                    for e, (u, v) in enumerate(G.edges)
                ],
            },
        }
    }
    return xmltodict.unparse(doc, pretty=True)


def _as_list(node) -> list:
    if node is None:
        return []
    return node if isinstance(node, list) else [node]


def graph_from_graphml(text: str) -> UndirectedGraph:
    try:
        doc = xmltodict.parse(text)
    except Exception as exc:  # expat reports position as "line N, column M"
        line = getattr(exc, "lineno", 0) or 0
        offset = getattr(exc, "offset", 0) or 0
        raise ParseError(f"malformed GraphML: {exc}", line, offset) from exc
    try:
        graph = doc["graphml"]["graph"]
        verts = []
        ids = {}
        for node in _as_list(graph.get("node")):
            data = {d["@key"]: (d.get("#text") or "") for d in _as_list(node.get("data"))}
            roles = frozenset(RoleTag.parse(r) for r in data.get("roles", "").split())
            ids[node["@id"]] = len(verts)
            verts.append(Vertex(node["@id"], Side.parse(data.get("side") or None), roles))
        edges = [(ids[e["@source"]], ids[e["@target"]]) for e in _as_list(graph.get("edge"))]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"GraphML does not describe a graph: {exc}") from exc
    if verts and all(v.side is not None for v in verts):
        return BipartiteGraph(verts, edges)
    return UndirectedGraph(verts, edges)


# -- public entry points -------------------------------------------------------
def export_graph(G: UndirectedGraph, fmt: str = "json", overlay: Optional[Iterable[int]] = None) -> bytes:
    """Serialise G; ``overlay`` is an optional matching (edge indices)."""
    if fmt == "json":
        text = json.dumps(graph_to_dict(G, overlay), indent=1)
    elif fmt == "dot":
        text = graph_to_dot(G, overlay)
    elif fmt == "graphml":
        text = graph_to_graphml(G, overlay)
    else:
        raise ValueError(f"unknown graph format {fmt!r}; expected one of {FORMATS}")
    return text.encode("utf-8")


def import_graph(data: Union[bytes, str], fmt: str = "json") -> UndirectedGraph:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}", 1, exc.start) from exc
    if fmt == "graphml":
        return graph_from_graphml(data)
    if fmt != "json":
        raise ValueError(f"cannot import format {fmt!r}")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("graph JSON must be an object", 1, 1)
    return graph_from_dict(doc)


def read_overlay(data: Union[bytes, str]) -> Optional[list]:
    """The optional "matching" overlay of a graph JSON document."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    match = doc.get("matching") if isinstance(doc, dict) else None
    return list(match["edges"]) if match else None
