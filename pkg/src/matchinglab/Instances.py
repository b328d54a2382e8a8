#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Problem instances fed to the reductions, with their readers and generators.

    HamInstance    digraph H plus designated arc pairs (e_i, ebar_i) leaving
                   distinct vertices v_i that have out-degree exactly two
    Pattern        one arc from every designated pair
    ScaleProfile   city height h_c, city width t_c, ladders per forall gadget t
    CnfFormula     clauses of at most three DIMACS literals

HamInstance JSON::

    {"n": 4, "labels": [...], "arcs": [[u, v], ...], "pairs": [[e_idx, ebar_idx], ...]}

("n" and "labels" are optional; without them n is one more than the largest
vertex index.) CNF input is DIMACS: ``c`` comment lines, one ``p cnf V C``
header, clauses as literal lists terminated by 0.
"""

from __future__ import annotations

import itertools
import json
import logging
import random
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

from .GraphCore import DirectedGraph
from .LabErrors import (
    ClauseTooLarge,
    InstanceInvalid,
    LabError,
    ParseError,
    PatternInvalid,
    ProfileInvalid,
    ProfileMismatch,
)

log = logging.getLogger(__name__)


# -- Hamiltonian-cycle instances -----------------------------------------------
@dataclass(frozen=True)
class Pattern:
    """Arc indices chosen from the designated pairs, one per pair."""

    arcs: FrozenSet[int]
    choices: Tuple[bool, ...]  # choices[i] is True when ebar_i was picked

    def __str__(self) -> str:
        return "{" + ", ".join(("~e" if bar else "e") + str(i + 1) for i, bar in enumerate(self.choices)) + "}"

    def to_json(self) -> dict:
        return {"arcs": sorted(self.arcs), "choices": ["ebar" if c else "e" for c in self.choices]}


@dataclass(frozen=True)
class HamInstance:
    graph: DirectedGraph
    pairs: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        H = self.graph
        seen_arcs: set = set()
        tails: set = set()
        for i, (e, ebar) in enumerate(self.pairs):
            for a in (e, ebar):
                if not (0 <= a < H.num_arcs):
                    raise InstanceInvalid(f"pair {i + 1} references arc {a} outside 0..{H.num_arcs - 1}")
                if a in seen_arcs:
                    raise InstanceInvalid(f"arc {a} appears in more than one designated pair")
                seen_arcs.add(a)
            v = H.arcs[e][0]
            if H.arcs[ebar][0] != v:
                raise InstanceInvalid(f"pair {i + 1}: arcs {H.arcs[e]} and {H.arcs[ebar]} leave different vertices")
            if v in tails:
                raise InstanceInvalid(f"vertex {v} is designated twice")
            tails.add(v)
            if H.out_degree(v) != 2:
                raise InstanceInvalid(f"designated vertex {v} has out-degree {H.out_degree(v)}, expected 2")

    @property
    def n(self) -> int:
        return self.graph.num_vertices

    @property
    def k(self) -> int:
        return len(self.pairs)

    @property
    def designated_arcs(self) -> FrozenSet[int]:
        return frozenset(a for pair in self.pairs for a in pair)

    def designated(self, i: int) -> Tuple[int, int, int]:
        """(v_i, u_i, w_i) with e_i = (v_i, u_i) and ebar_i = (v_i, w_i)."""
        e, ebar = self.pairs[i]
        v, u = self.graph.arcs[e]
        _, w = self.graph.arcs[ebar]
        return v, u, w

    def pattern(self, choices: Sequence[Union[bool, str]]) -> Pattern:
        if len(choices) != self.k:
            raise PatternInvalid(f"pattern has {len(choices)} choices for {self.k} pairs")
        flags = []
        for c in choices:
            if isinstance(c, str):
                if c not in ("e", "ebar", "t", "b"):
                    raise PatternInvalid(f"unknown choice {c!r}")
                c = c in ("ebar", "b")
            flags.append(bool(c))
        arcs = frozenset(pair[1] if bar else pair[0] for pair, bar in zip(self.pairs, flags))
        return Pattern(arcs, tuple(flags))

    def pattern_from_arcs(self, arcs: FrozenSet[int]) -> Pattern:
        flags = []
        for i, (e, ebar) in enumerate(self.pairs):
            picked = (e in arcs) + (ebar in arcs)
            if picked != 1:
                raise PatternInvalid(f"pair {i + 1}: {picked} arcs chosen, expected exactly 1")
            flags.append(ebar in arcs)
        return Pattern(frozenset(a for a in arcs if a in self.designated_arcs), tuple(flags))

    def patterns(self) -> Iterator[Pattern]:
        """All 2^k patterns; pattern number j picks ebar_i when bit i of j is set."""
        for j in range(2 ** self.k):
            yield self.pattern([bool((j >> i) & 1) for i in range(self.k)])

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "labels": list(self.graph.labels),
            "arcs": [list(a) for a in self.graph.arcs],
            "pairs": [list(p) for p in self.pairs],
        }

    def relabeled(self, perm: Sequence[int]) -> "HamInstance":
        return HamInstance(self.graph.relabeled(perm), self.pairs)


def instance_from_dict(doc: dict) -> HamInstance:
    try:
        arcs = [(int(u), int(v)) for u, v in doc["arcs"]]
        pairs = tuple((int(e), int(eb)) for e, eb in doc.get("pairs", ()))
        n = int(doc.get("n", 1 + max((max(a) for a in arcs), default=-1)))
        labels = doc.get("labels") or n
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"instance JSON does not follow the schema: {exc}") from exc
    return HamInstance(DirectedGraph(labels, arcs), pairs)


def read_instance(data: Union[bytes, str]) -> HamInstance:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("instance JSON must be an object", 1, 1)
    return instance_from_dict(doc)


def complete_yes_instance(n: int, k: int) -> HamInstance:
    """Complete digraph in which vertices 0..k-1 keep only their two designated arcs.

    v_i = i leaves to u_i = k + 2i and w_i = k + 2i + 1. All 2k targets are
    distinct undesignated vertices, so every pattern extends to a Hamiltonian
    cycle v_1 t_1 v_2 t_2 ... v_k t_k (rest) v_1.
    """
    if n < max(3, 3 * k):
        raise InstanceInvalid(f"need n >= max(3, 3k) vertices, got n={n}, k={k}")
    arcs: List[Tuple[int, int]] = []
    pairs = []
    for i in range(k):
        pairs.append((len(arcs), len(arcs) + 1))
        arcs += [(i, k + 2 * i), (i, k + 2 * i + 1)]
    for u in range(k, n):
        arcs += [(u, v) for v in range(n) if v != u]
    return HamInstance(DirectedGraph(n, arcs), tuple(pairs))


def complete_no_instance(n: int, k: int) -> HamInstance:
    """complete_yes_instance with w_1's out-arcs cut down to the single arc back to v_1.

    Every pattern containing ebar_1 then closes the 2-cycle v_1 w_1 v_1 early,
    so the first refuting pattern is {ebar_1, e_2, ..., e_k}.
    """
    if k < 1:
        raise InstanceInvalid("a refuted pattern needs at least one designated pair")
    yes = complete_yes_instance(n, k)
    w1 = k + 1
    arcs = [a for a in yes.graph.arcs if a[0] != w1 or a[1] == 0]
    pairs = tuple((arcs.index(yes.graph.arcs[e]), arcs.index(yes.graph.arcs[eb])) for e, eb in yes.pairs)
    return HamInstance(DirectedGraph(n, arcs), pairs)


def random_ham_instance(n: int, k: int, rng: random.Random, density: float = 0.5) -> HamInstance:
    """Random instance with a planted Hamiltonian cycle through every designated vertex.

    The planted cycle supplies e_i; ebar_i goes to a random other vertex.
    Undesignated vertices get each remaining arc with probability ``density``.
    Whether the result is a yes-instance is for the oracle to decide.
    """
    if n < 3 or k > n:
        raise InstanceInvalid(f"cannot plant k={k} designated pairs in n={n} vertices")
    order = list(range(n))
    rng.shuffle(order)
    succ = {order[i]: order[(i + 1) % n] for i in range(n)}
    designated = sorted(rng.sample(range(n), k))
    arcs: List[Tuple[int, int]] = []
    pairs = []
    for v in designated:
        other = rng.choice([w for w in range(n) if w not in (v, succ[v])])
        pairs.append((len(arcs), len(arcs) + 1))
        arcs += [(v, succ[v]), (v, other)]
    for u in range(n):
        if u in designated:
            continue
        for v in range(n):
            if v != u and (v == succ[u] or rng.random() < density):
                arcs.append((u, v))
    return HamInstance(DirectedGraph(n, arcs), tuple(pairs))


# -- scale profiles ------------------------------------------------------------
@dataclass(frozen=True)
class ScaleProfile:
    """City height h_c, city width t_c and ladders per forall gadget t."""

    h_c: int
    t_c: int
    t: int
    paper: bool = False

    def __post_init__(self) -> None:
        for name in ("h_c", "t_c", "t"):
            if getattr(self, name) < 1:
                raise ProfileInvalid(f"{name} must be >= 1, got {getattr(self, name)}")

    @classmethod
    def paper_profile(cls, n: int) -> "ScaleProfile":
        """h_c = 2n^4, t_c = 4n^4 + 100n, t = n^4 (width follows the regular-cycle hypothesis)."""
        return cls(h_c=2 * n ** 4, t_c=4 * n ** 4 + 100 * n, t=n ** 4, paper=True)

    @classmethod
    def desk(cls, t: int = 1, t_c: int = 1) -> "ScaleProfile":
        return cls(h_c=2 * t, t_c=t_c, t=t)

    @classmethod
    def parse(cls, text: str) -> "ScaleProfile":
        """``h,t,width`` as on the command line."""
        try:
            h_c, t, t_c = (int(x) for x in text.split(","))
        except ValueError as exc:
            raise ProfileInvalid(f"profile {text!r} is not 'h,t,width'") from exc
        return cls(h_c=h_c, t_c=t_c, t=t)

    @property
    def city_scale(self) -> Tuple[int, int]:
        """(t_c, h_c) as taken by the city constructors."""
        return self.t_c, self.h_c

    def require_synthesis(self) -> None:
        if self.h_c != 2 * self.t:
            raise ProfileMismatch(f"synthesis needs h_c = 2t, got h_c={self.h_c}, t={self.t}")

    def __str__(self) -> str:
        kind = "paper" if self.paper else "desk"
        return f"{self.h_c},{self.t},{self.t_c} ({kind})"

    def to_json(self) -> dict:
        return {"h_c": self.h_c, "t_c": self.t_c, "t": self.t, "kind": "paper" if self.paper else "desk"}


# -- CNF formulas --------------------------------------------------------------
@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        for j, clause in enumerate(self.clauses):
            if not clause:
                raise InstanceInvalid(f"clause {j + 1} is empty")
            if len(clause) > 3:
                raise ClauseTooLarge(f"clause {j + 1} has {len(clause)} literals")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise InstanceInvalid(f"clause {j + 1}: literal {lit} outside 1..{self.num_vars}")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def num_literals(self) -> int:
        return sum(len(c) for c in self.clauses)

    def satisfied(self, assignment: Sequence[bool]) -> int:
        """Number of clauses satisfied; assignment[i] is the value of variable i+1."""
        return sum(
            1 for clause in self.clauses if any(assignment[abs(l) - 1] == (l > 0) for l in clause)
        )

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines += [" ".join(str(l) for l in clause) + " 0" for clause in self.clauses]
        return "\n".join(lines) + "\n"


def parse_dimacs(text: Union[bytes, str], allow_large: bool = False) -> CnfFormula:
    """Read a DIMACS CNF document; errors carry the 1-based line and column."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    header: Optional[Tuple[int, int]] = None
    clauses: List[Tuple[int, ...]] = []
    pending: List[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("c") or stripped.startswith("%"):
            continue
        if stripped.startswith("p"):
            parts = stripped.split()
            if header is not None:
                raise ParseError("second problem line", lineno, 1)
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError("problem line must be 'p cnf VARS CLAUSES'", lineno, 1)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise ParseError("non-numeric counts in problem line", lineno, 1) from None
            continue
        if header is None:
            raise ParseError("clause before the 'p cnf' line", lineno, 1)
        col = 1
        for token in line.split():
            col = line.index(token, col - 1) + 1
            try:
                lit = int(token)
            except ValueError:
                raise ParseError(f"bad literal {token!r}", lineno, col) from None
            if abs(lit) > header[0]:
                raise ParseError(f"literal {lit} exceeds the declared {header[0]} variables", lineno, col)
            if lit == 0:
                if not pending:
                    raise ParseError("empty clause", lineno, col)
                if len(pending) > 3 and not allow_large:
                    raise ClauseTooLarge(f"clause {len(clauses) + 1} has {len(pending)} literals (line {lineno})")
                clauses.append(tuple(pending))
                pending = []
            else:
                pending.append(lit)
            col += len(token)
    if header is None:
        raise ParseError("missing 'p cnf' line", 1, 1)
    if pending:
        clauses.append(tuple(pending))
    if len(clauses) != header[1]:
        log.warning("DIMACS header declares %d clauses, found %d", header[1], len(clauses))
    return CnfFormula(header[0], tuple(clauses))


def random_cnf(num_vars: int, num_clauses: int, rng: random.Random, max_width: int = 3) -> CnfFormula:
    clauses = []
    for _ in range(num_clauses):
        width = rng.randint(1, min(max_width, num_vars))
        chosen = rng.sample(range(1, num_vars + 1), width)
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in chosen))
    return CnfFormula(num_vars, tuple(clauses))


def all_assignments(num_vars: int) -> Iterator[Tuple[bool, ...]]:
    return itertools.product((False, True), repeat=num_vars)


if __name__ == "__main__":
    # python -m matchinglab.Instances
    results: Dict[str, bool] = {}

    def _check(label: str, text: str, expect_clauses: Optional[int], expect_error: Optional[type] = None) -> None:
        """Parse one document and print a PASS/FAIL line."""
        try:
            phi = parse_dimacs(text)
            ok = expect_error is None and len(phi.clauses) == expect_clauses
            got = f"{len(phi.clauses)} clauses"
        except LabError as exc:
            ok = expect_error is not None and isinstance(exc, expect_error)
            got = f"{type(exc).__name__}: {exc}"
        results[label] = ok
        print(f"[{'PASS' if ok else 'FAIL'}] {label}: {got}")

    _check("plain", "p cnf 3 2\n1 -2 0\n2 3 0\n", 2)
    _check("comments", "c hello\np cnf 1 1\nc mid\n1 0\n", 1)
    _check("split clause", "p cnf 3 1\n1 2\n3 0\n", 1)
    _check("missing header", "1 2 0\n", None, ParseError)
    _check("bad literal", "p cnf 2 1\n1 x 0\n", None, ParseError)
    _check("out of range", "p cnf 2 1\n1 5 0\n", None, ParseError)
    _check("wide clause", "p cnf 4 1\n1 2 3 4 0\n", None, ClauseTooLarge)

    failed = [k for k, ok in results.items() if not ok]
    print(f"{len(results) - len(failed)}/{len(results)} passed")
    raise SystemExit(1 if failed else 0)
