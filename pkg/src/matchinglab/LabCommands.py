#!/usr/bin/env python3
"""
The experiments behind each sub-command, returning Report objects.

Functions:
    cmd_diam(graph_path, config, threshold) -> Report
        Exact polytope diameter, witness pair and flip sequence, decision against a threshold.
    cmd_verify(lemma, params, config) -> Report
        Runs one lemma checker and reports its verdict.
    cmd_reduce(kind, input_path, config) -> Report
        Builds G_H, the folklore graph or the inapprox graph; census plus graph artefacts.
    cmd_roundtrip(config, instance_path | generate) -> Report
        G_H, canonical matchings, projection, synthesis, validation and extraction end to end.
    cmd_catalog(config) -> Report
        DOT gallery of every gadget kind in a default and a non-default state.
    render_report(report, fmt) -> str
"""

import json
import logging
import os
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import networkx as nx

from . import GadgetLib
from . import ReductionPipeline
from .Diagnostics import Diagnostics
from .GraphCore import UndirectedGraph, Vertex, is_bipartite_certificate
from .GraphIO import export_graph, graph_to_dot, import_graph
from .Instances import (
    HamInstance,
    ScaleProfile,
    complete_no_instance,
    complete_yes_instance,
    parse_dimacs,
    random_ham_instance,
    read_instance,
)
from .LabConfig import RunConfig
from .LabErrors import BudgetExceeded, InvariantViolation, ScaleInvalid
from .MatchingEngine import PerfectMatching, neighbor_cycles, polytope_diameter, random_flip_walk
from .OracleSuite import (
    MAX_CNF_VARIABLES,
    cnf_brute_force,
    forall_exists_decision,
    ham_cycle,
    oracle_provider,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 5


@dataclass
class Report:
    command: str
    ok: bool
    data: dict
    config: RunConfig
    diagnostics: Diagnostics
    artefacts: Dict[str, bytes] = field(default_factory=dict)
    dot: Optional[str] = None

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.ok else EXIT_CHECK_FAILED

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "ok": self.ok,
            "exit_code": self.exit_code,
            "config": self.config.to_json(),
            "data": self.data,
            "artefacts": sorted(self.artefacts),
            "diagnostics": self.diagnostics.to_json(),
        }


def _read(path: str) -> bytes:
    with open(path, "rb") as fp:
        return fp.read()


def _graph_format(path: str) -> str:
    return "graphml" if os.path.splitext(path)[1].lower() in (".graphml", ".xml") else "json"


# -- rendering -----------------------------------------------------------------
def _table_lines(value, prefix: str = "") -> List[str]:
    if isinstance(value, dict):
        lines: List[str] = []
        for key, sub in value.items():
            lines += _table_lines(sub, f"{prefix}.{key}" if prefix else str(key))
        return lines
    if isinstance(value, list) and len(value) > 12:
        shown = ", ".join(json.dumps(v) for v in value[:12])
        return [f"{prefix}: [{shown}, ...] ({len(value)} items)"]
    return [f"{prefix}: {json.dumps(value)}"]


def render_report(report: Report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_json(), indent=2) + "\n"
    if fmt == "dot":
        if report.dot is not None:
            return report.dot
        report.diagnostics.warning(f"{report.command} has no graph to draw", "falling back to table output")
    status = "PASS" if report.ok else "FAIL"
    lines = [f"matchinglab {report.command}: {status}"]
    lines += _table_lines(report.data)
    lines += ["", f"profile: {report.config.profile}"]
    lines += report.diagnostics.lines()
    return "\n".join(lines) + "\n"


# -- diam ----------------------------------------------------------------------
def cmd_diam(graph_path: str, config: RunConfig, threshold: Optional[int] = None,
             diag: Optional[Diagnostics] = None) -> Report:
    diag = diag or Diagnostics()
    G = import_graph(_read(graph_path), _graph_format(graph_path))
    result = polytope_diameter(G, cap=config.cap, workers=config.workers)
    data = result.to_json()
    data["graph"] = {"vertices": G.num_vertices, "edges": G.num_edges, "hash": G.content_hash}
    if threshold is not None:
        data["threshold"] = threshold
        data["decision"] = "yes" if result.diameter <= threshold else "no"
    diag.info(f"diameter {result.diameter} over {result.matching_count} perfect matchings")
    overlay = sorted(result.pair[0].edge_set | result.pair[1].edge_set)
    return Report("diam", True, data, config, diag, dot=graph_to_dot(G, overlay, name="witness_pair"))


# -- verify --------------------------------------------------------------------
def _scale(params: dict) -> Tuple[int, int]:
    return int(params.get("t_c", 1)), int(params.get("h_c", 1))


def _estimate(lemma: str, params: dict) -> int:
    """Rough count of states the checker explores."""
    h = int(params.get("h", 3))
    t = int(params.get("t", 2))
    t_c, h_c = _scale(params)
    if lemma in ("tower", "tower-upper"):
        return 3 ** h if lemma == "tower" else 9 ** h
    if lemma == "city":
        return 3 ** (t_c * h_c + 2)
    if lemma in ("forall", "damage"):
        return 16 ** (min(t, 2) + t_c * h_c)
    if lemma == "xor":
        return 8 ** (t_c * h_c + 2)
    if lemma == "semi-default":
        return int(params.get("trials", 100)) * 1000
    return 1000


def _verify_semi_default(params: dict, config: RunConfig) -> GadgetLib.LemmaVerdict:
    n, k = int(params.get("n", 4)), int(params.get("k", 1))
    instance = random_ham_instance(n, k, random.Random(config.seed))
    return ReductionPipeline.check_semi_default_density(
        instance, config.profile, int(params.get("trials", 100)), random.Random(config.seed)
    )


def _verify_inapprox(params: dict, config: RunConfig) -> GadgetLib.LemmaVerdict:
    H = cycle_graph(int(params.get("n", 4)))
    t_c, h_c = int(params.get("t_c", 1)), int(params.get("h_c", 2))
    return ReductionPipeline.check_inapprox(H, ScaleProfile(h_c=h_c, t_c=t_c, t=1), random.Random(config.seed))


def cycle_graph(n: int) -> UndirectedGraph:
    """Plain undirected n-cycle c0 c1 ... c(n-1)."""
    return UndirectedGraph([Vertex(f"c{i}", None, frozenset()) for i in range(n)],
                           [(i, (i + 1) % n) for i in range(n)])


LEMMAS: Dict[str, Callable[[dict, RunConfig], GadgetLib.LemmaVerdict]] = {
    "tower": lambda p, c: GadgetLib.check_tower_lower_bound(int(p.get("h", 3))),
    "tower-upper": lambda p, c: GadgetLib.check_tower_upper_bound(int(p.get("h", 3))),
    "city": lambda p, c: GadgetLib.check_city(int(p.get("t_c", 2)), int(p.get("h_c", 2))),
    "ladder-states": lambda p, c: GadgetLib.check_ladder_states(),
    "ladder-necessary": lambda p, c: GadgetLib.check_ladder_necessary(),
    "xor": lambda p, c: GadgetLib.check_xor_exclusivity(_scale(p)),
    "forall": lambda p, c: GadgetLib.check_forall(int(p.get("t", 2)), _scale(p)),
    "damage": lambda p, c: GadgetLib.check_damage(int(p.get("t", 5)), _scale(p), budget=c.budget),
    "semi-default": _verify_semi_default,
    "inapprox": _verify_inapprox,
}


def cmd_verify(lemma: str, params: dict, config: RunConfig, diag: Optional[Diagnostics] = None) -> Report:
    diag = diag or Diagnostics()
    if lemma not in LEMMAS:
        raise ScaleInvalid(f"unknown lemma {lemma!r}; choose from {', '.join(sorted(LEMMAS))}")
    estimate = _estimate(lemma, params)
    if estimate > config.budget:
        raise BudgetExceeded(config.budget, estimate)
    verdict = LEMMAS[lemma](params, config)
    if verdict.ok:
        diag.info(f"{verdict.name}: pass", f"{verdict.checked} checked")
    else:
        diag.error(f"{verdict.name}: fail", f"{verdict.violations} violations")
    data = verdict.to_json()
    data["params"] = dict(params)
    return Report("verify", verdict.ok, data, config, diag)


# -- reduce --------------------------------------------------------------------
def _reduce_gh(data: bytes, config: RunConfig, diag: Diagnostics, paper: bool, check: bool) -> Report:
    instance = read_instance(data)
    if paper:
        profile = ScaleProfile.paper_profile(instance.n)
        census = ReductionPipeline.census_GH(instance, profile)
        diag.warning("paper profile: census only", "the graph is too large to build")
        out = {"kind": "gh", "profile": profile.to_json(), "built": False, "census": census}
        return Report("reduce", True, out, config, diag)
    gh = ReductionPipeline.build_GH(instance, config.profile)
    G = gh.graph
    cert = is_bipartite_certificate(G)
    M_def = ReductionPipeline.default_matching(gh)
    analytic = ReductionPipeline.census_GH(instance, config.profile)
    out = {
        "kind": "gh",
        "profile": config.profile.to_json(),
        "built": True,
        "census": gh.census(),
        "analytic_census": analytic,
        "bipartite": cert.ok and cert.verify(G),
        "default_matching_edges": len(M_def),
        "graph_hash": G.content_hash,
    }
    ok = out["bipartite"] and all(gh.census()[k] == analytic[k] for k in ("cities", "v_s", "vertices", "edges"))
    if check:
        decision = forall_exists_decision(instance, workers=config.workers)
        out["forall_exists"] = decision.to_json()
    diag.info(f"G_H built with {G.num_vertices} vertices", str(config.profile))
    artefacts = {"G_H.json": export_graph(G, "json", M_def.edges), "G_H.dot": export_graph(G, "dot", M_def.edges)}
    return Report("reduce", ok, out, config, diag, artefacts, dot=artefacts["G_H.dot"].decode("utf-8"))


def _reduce_folklore(data: bytes, config: RunConfig, diag: Diagnostics, check: bool) -> Report:
    formula = parse_dimacs(data)
    fc = ReductionPipeline.build_folklore_hc(formula)
    census = fc.census()
    out: dict = {"kind": "folklore", "census": census}
    ok = True
    if not census["bound_holds"]:
        diag.warning("vertex count exceeds 60m + 3", f"{census['vertices']} > {census['bound']}")
    if formula.num_vars <= MAX_CNF_VARIABLES:
        sat = cnf_brute_force(formula)
        out["cnf"] = sat.to_json()
        if check:
            order = ham_cycle(fc.graph, "undirected")
            out["hamiltonian"] = order is not None
            out["agree"] = (order is not None) == sat.satisfiable
            ok = out["agree"]
    G = fc.graph
    artefacts = {"H_phi.json": export_graph(G, "json"), "H_phi.dot": export_graph(G, "dot")}
    return Report("reduce", ok, out, config, diag, artefacts, dot=artefacts["H_phi.dot"].decode("utf-8"))


def _reduce_inapprox(data: bytes, fmt: str, config: RunConfig, diag: Diagnostics, paper: bool) -> Report:
    H = import_graph(data, fmt)
    consts = ReductionPipeline.epsilon_constants().to_json()
    if paper:
        profile = ReductionPipeline.inapprox_profile(H.num_vertices)
        n = H.num_vertices
        census = {
            "cities": n,
            "towers": n * profile.t_c,
            "crossing_edges": 2 * H.num_edges,
            "v_s": n,
            "vertices": 2 * n + n * profile.t_c * (2 * profile.h_c + 2),
        }
        diag.warning("paper profile: census only", "the graph is too large to build")
        out = {"kind": "inapprox", "profile": profile.to_json(), "built": False, "census": census, "constants": consts}
        return Report("reduce", True, out, config, diag)
    ic = ReductionPipeline.build_inapprox_G(H, config.profile)
    G = ic.graph
    out = {
        "kind": "inapprox",
        "profile": config.profile.to_json(),
        "built": True,
        "census": ic.census(),
        "bipartite": is_bipartite_certificate(G).ok,
        "constants": consts,
    }
    M = ReductionPipeline.inapprox_default(ic)
    artefacts = {"G.json": export_graph(G, "json", M.edges), "G.dot": export_graph(G, "dot", M.edges)}
    return Report("reduce", out["bipartite"], out, config, diag, artefacts, dot=artefacts["G.dot"].decode("utf-8"))


def cmd_reduce(kind: str, input_path: str, config: RunConfig, diag: Optional[Diagnostics] = None,
               paper: bool = False, check: bool = False) -> Report:
    diag = diag or Diagnostics()
    data = _read(input_path)
    if kind == "gh":
        return _reduce_gh(data, config, diag, paper, check)
    if kind == "folklore":
        return _reduce_folklore(data, config, diag, check)
    if kind == "inapprox":
        return _reduce_inapprox(data, _graph_format(input_path), config, diag, paper)
    raise ScaleInvalid(f"unknown reduction {kind!r}; choose gh, folklore or inapprox")


# -- roundtrip -----------------------------------------------------------------
def generate_instance(kind: str, n: int, k: int, seed: int) -> HamInstance:
    if kind == "yes":
        return complete_yes_instance(n, k)
    if kind == "no":
        return complete_no_instance(n, k)
    if kind == "random":
        return random_ham_instance(n, k, random.Random(seed))
    raise ScaleInvalid(f"unknown instance generator {kind!r}; choose yes, no or random")


def _round_trip_pattern(gh, pattern, provider, scramble: int, rng: random.Random, diag: Diagnostics) -> dict:
    instance = gh.instance
    stages: Dict[str, bool] = {}
    M_P = ReductionPipeline.pattern_matching(gh, pattern)
    M_def = ReductionPipeline.default_matching(gh)
    stages["canonical_matchings"] = ReductionPipeline.is_semi_default(gh.registry, M_P)
    start = M_P
    if scramble:
        start = random_flip_walk(M_P, scramble, rng)
    M1, proj = ReductionPipeline.semi_default_projection(gh, start)
    M2, _ = ReductionPipeline.semi_default_projection(gh, M_def)
    stages["projection"] = len(proj) <= len(gh.v_s)

    result = ReductionPipeline.synthesize_flip_sequence(gh, M1, M2, provider)
    stages["synthesis"] = len(result.sequence) == 2 * gh.profile.h_c

    extracted_ok = True
    designated = instance.designated_arcs
    H = instance.graph
    for i, cycle in enumerate(result.sequence.cycles):
        order, found = ReductionPipeline.extract_ham_cycle(gh, cycle)
        n = len(order)
        used = {H.arc_index(order[j], order[(j + 1) % n]) for j in range(n)}
        wanted = result.patterns[i // 2]
        if ReductionPipeline.check_ham_route(H, order) is not None or found != wanted or used & designated != wanted.arcs:
            extracted_ok = False
            diag.error(f"cycle {i} does not extract to a cycle respecting {wanted}")
    stages["extraction"] = extracted_ok

    combined = proj.then(result.sequence)
    census = ReductionPipeline.regularity_census(gh.graph, gh.registry, combined)
    synthesized_regular = all(census.per_cycle[len(proj):])
    stages["regularity"] = synthesized_regular and census.irregular <= 2 * len(gh.v_s)
    visits = ReductionPipeline.regularity_census(gh.graph, gh.registry, result.sequence, locked_to_default=True)
    stages["city_visits"] = not visits.flagged
    return {
        "pattern": str(pattern),
        "stages": stages,
        "projection_length": len(proj),
        "synthesis": result.to_json(),
        "regularity": census.to_json(),
    }


def cmd_roundtrip(config: RunConfig, instance_path: Optional[str] = None,
                  generate: Optional[Tuple[str, int, int]] = None, max_patterns: int = 4, scramble: int = 0,
                  diag: Optional[Diagnostics] = None) -> Report:
    diag = diag or Diagnostics()
    if instance_path:
        instance = read_instance(_read(instance_path))
    elif generate:
        instance = generate_instance(generate[0], generate[1], generate[2], config.seed)
    else:
        raise ScaleInvalid("roundtrip needs an instance file or --generate")
    profile = config.profile
    profile.require_synthesis()
    gh = ReductionPipeline.build_GH(instance, profile)
    cert = is_bipartite_certificate(gh.graph)
    decision = forall_exists_decision(instance, workers=config.workers)
    diag.info(f"forall-exists verdict: {'yes' if decision.verdict else 'no'}", f"{len(decision.table)} patterns")

    patterns = list(instance.patterns())
    refuting = decision.refuting
    if refuting is not None:
        patterns.remove(refuting)
        patterns.insert(0, refuting)
    provider = oracle_provider(instance)
    rng = random.Random(config.seed)
    runs = [_round_trip_pattern(gh, p, provider, scramble, rng, diag) for p in patterns[:max_patterns]]

    ok = cert.ok and all(all(run["stages"].values()) for run in runs)
    data = {
        "instance": {"n": instance.n, "k": instance.k, "arcs": instance.graph.num_arcs,
                     "hash": instance.graph.content_hash},
        "profile": profile.to_json(),
        "graph": {"vertices": gh.graph.num_vertices, "edges": gh.graph.num_edges, "hash": gh.graph.content_hash},
        "bipartite": cert.ok,
        "forall_exists": decision.verdict,
        "patterns_run": len(runs),
        "runs": runs,
    }
    if not ok:
        diag.error("round trip failed", "see the stage flags of each run")
    return Report("roundtrip", ok, data, config, diag)


# -- catalog -------------------------------------------------------------------
def complete_matching(G: UndirectedGraph, partial: Sequence[int]) -> PerfectMatching:
    """Extend ``partial`` by a maximum matching on the uncovered vertices."""
    covered = {x for e in partial for x in G.edges[e]}
    rest = [v for v in range(G.num_vertices) if v not in covered]
    g = G.to_networkx().subgraph(rest)
    top = [v for v in rest if G.vertices[v].side is not None and G.vertices[v].side.value == "L"]
    mate = nx.bipartite.hopcroft_karp_matching(g, top_nodes=top)
    extra = {G.edge_index(u, v) for u, v in mate.items() if u in top}
    return PerfectMatching.of(G, set(partial) | extra)


def _flipped(M: PerfectMatching) -> PerfectMatching:
    for cycle in neighbor_cycles(M):
        return M.flip(cycle)
    raise InvariantViolation("matching has no alternating cycle to flip")


def cmd_catalog(config: RunConfig, diag: Optional[Diagnostics] = None) -> Report:
    diag = diag or Diagnostics()
    t_c, h_c = config.profile.city_scale
    gallery: Dict[str, Tuple[UndirectedGraph, Optional[PerfectMatching]]] = {}

    tower = GadgetLib.tower_harness(h_c)
    gallery["tower_default"] = (tower.graph, tower.matching(GadgetLib.tower_state_pairs(h_c, GadgetLib.StateLabel.DEFAULT)))
    if h_c >= 2:
        gallery["tower_locked"] = (tower.graph, tower.matching(GadgetLib.tower_state_pairs(h_c, GadgetLib.StateLabel.LOCKED)))

    G, city = GadgetLib.build_city(t_c, h_c)
    default = [e for t in city.children for e in ReductionPipeline._tower_edges(G, t, GadgetLib.StateLabel.DEFAULT)]
    gallery["city_default"] = (G, PerfectMatching.of(G, set(default)))
    if h_c >= 2:
        locked = [e for t in city.children for e in ReductionPipeline._tower_edges(G, t, GadgetLib.StateLabel.LOCKED)]
        gallery["city_locked"] = (G, PerfectMatching.of(G, set(locked)))

    G, xor = GadgetLib.xor_harness((t_c, h_c))
    towers = [t for c in xor.children for t in c.children]
    M = complete_matching(G, sorted({e for t in towers for e in ReductionPipeline._tower_edges(G, t, GadgetLib.StateLabel.DEFAULT)}))
    gallery["xor_default"] = (G, M)
    gallery["xor_flipped"] = (G, _flipped(M))

    ladder = GadgetLib.ladder_harness()
    gallery["ladder_default"] = (ladder.graph, GadgetLib.ladder_state_matching(ladder, range(1, 6)))
    gallery["ladder_top_open"] = (
        ladder.graph, ladder.matching(GadgetLib.LADDER_TOP_OPEN, GadgetLib.LADDER_CLOSURE_MATCHED)
    )

    fh = GadgetLib.forall_harness(config.profile.t, (t_c, h_c))
    gallery["forall_harness"] = (fh.graph, None)
    gh = ReductionPipeline.build_GH(complete_yes_instance(3, 1), ScaleProfile(h_c=max(h_c, 2), t_c=t_c, t=config.profile.t))
    gallery["forall_default"] = (gh.graph, ReductionPipeline.default_matching(gh))
    gallery["forall_ebar"] = (gh.graph, ReductionPipeline.pattern_matching(gh, gh.instance.pattern(["ebar"])))

    artefacts: Dict[str, bytes] = {}
    data: Dict[str, dict] = {}
    for name, (graph, matching) in gallery.items():
        overlay = matching.edges if matching is not None else None
        artefacts[f"{name}.dot"] = export_graph(graph, "dot", overlay)
        data[name] = {"vertices": graph.num_vertices, "edges": graph.num_edges, "matched": len(overlay or ())}
    diag.info(f"catalog of {len(gallery)} gadget drawings", str(config.profile))
    dot = "\n".join(a.decode("utf-8") for a in artefacts.values())
    return Report("catalog", True, data, config, diag, artefacts, dot=dot)
