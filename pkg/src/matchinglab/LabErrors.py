#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Exception hierarchy shared by every matchinglab module.

Everything raised on purpose derives from LabError so the command line can map
a failure to an exit code without catching unrelated Python errors. Operations
that *verify* something (flip-sequence validation, lemma checks) report a
status object instead of raising; see MatchingEngine.ValidationResult and
GadgetLib.LemmaVerdict.
"""

from __future__ import annotations

from typing import Optional


class LabError(Exception):
    """Base class for every error the laboratory raises deliberately."""


# -- graph construction --------------------------------------------------------
class NotBipartite(LabError):
    """An edge joins two vertices declared on the same side."""


class DuplicateEdge(LabError):
    """The same unordered vertex pair was listed twice."""


class SelfLoop(LabError):
    """An edge or arc starts and ends at the same vertex."""


class DanglingEndpoint(LabError):
    """An edge references a vertex index that was never declared."""


class DuplicateVertex(LabError):
    """Two vertices share an id, or a role tag resolves to two vertices."""


class EdgeNotFound(LabError):
    """The requested edge (or logical gadget edge) does not exist."""


class ParseError(LabError):
    """Input could not be decoded; carries the 1-based line and column."""

    def __init__(self, message: str, line: int = 0, offset: int = 0) -> None:
        self.line = line
        self.offset = offset
        where = f" (line {line}, offset {offset})" if line else ""
        super().__init__(message + where)


# -- matchings and search ------------------------------------------------------
class NotPerfect(LabError):
    """An edge set does not cover every vertex exactly once."""


class MatchingMismatch(LabError):
    """Two matchings belong to different graphs (content hashes differ)."""


class CapExceeded(LabError):
    """An enumeration produced more results than its cap allows."""

    def __init__(self, cap: int, found: int, message: Optional[str] = None) -> None:
        self.cap = cap
        self.found = found
        super().__init__(message or f"more than {cap} results (found {found} before stopping)")


class BudgetExceeded(LabError):
    """A search explored more states than its budget allows."""

    def __init__(self, budget: int, explored: int) -> None:
        self.budget = budget
        self.explored = explored
        super().__init__(f"state budget {budget} exhausted after {explored} states")


class NoPerfectMatching(LabError):
    """The graph has no perfect matching, so its polytope is empty."""


class NotACycle(LabError):
    """An edge set was expected to form one simple cycle and does not."""


class Unreached(LabError):
    """The goal state was not reached within the allowed length."""


class InvariantViolation(LabError):
    """An internal structural claim failed on a concrete object."""


# -- gadgets -------------------------------------------------------------------
class ScaleInvalid(LabError):
    """A gadget scale parameter is out of range."""


class WrongGraph(LabError):
    """A gadget handle does not belong to the matching's graph."""


class StateNotSemiDefault(LabError):
    """A ladder transfer was requested between non-semi-default states."""


# -- reductions ----------------------------------------------------------------
class ProfileInvalid(LabError):
    """A scale profile violates its own constraints."""


class ProfileMismatch(LabError):
    """The profile cannot support the requested operation (h_c != 2t)."""


class InstanceInvalid(LabError):
    """A Hamiltonian-cycle instance or formula is malformed."""


class PatternInvalid(LabError):
    """A pattern does not pick exactly one arc from every designated pair."""


class HamProviderFailed(LabError):
    """No Hamiltonian cycle respects the demanded pattern."""

    def __init__(self, pattern: object, detail: str = "") -> None:
        self.pattern = pattern
        text = f"no Hamiltonian cycle respects pattern {pattern}"
        super().__init__(text + (f": {detail}" if detail else ""))


class NotRegular(LabError):
    """A cycle misses a city, or traverses a gadget in no legal state."""


class ClauseTooLarge(LabError):
    """A clause has more than three literals."""


class NotHamiltonian(LabError):
    """A supplied vertex order is not a Hamiltonian cycle."""


class InfeasibleScale(LabError):
    """The requested object is too large to build or search."""

    def __init__(self, message: str, vertices: Optional[int] = None) -> None:
        self.vertices = vertices
        super().__init__(message)


# -- oracles -------------------------------------------------------------------
class TooManyPairs(LabError):
    """Pattern enumeration was asked for more designated pairs than allowed."""


class TooManyVariables(LabError):
    """Brute-force satisfiability was asked for too many variables."""


class InvalidWalk(LabError):
    """A closed walk uses a non-edge or is empty."""
