"""Finite-domain checker for behavioural inheritance between classes.

A subclass inherits behaviourally when, viewed through the projection onto
its superclass's fields, it is a data refinement of the superclass.  Classes
are written in a small specification language (see :mod:`bicheck.dsl`),
their state spaces and operation relations are enumerated exhaustively, and
each refinement obligation is checked with a concrete witness on failure.
"""

from bicheck.dsl import ParseError, ParseFailure, format_hierarchy, parse, parse_file
from bicheck.model import Hierarchy, StructuralError, validate
from bicheck.refinement import (
    BLOCKING,
    NONBLOCKING,
    CheckConfig,
    CheckReport,
    Finding,
    Kind,
    Verdict,
    check_edge,
    check_hierarchy,
    check_pair,
    replay_witness,
)
from bicheck.semantics import (
    StateSpaceTooLarge,
    build_relation,
    enumerate_states,
    lift_relation,
    precondition,
    project,
)
from bicheck.system import (
    Call,
    Delete,
    New,
    Simulator,
    SystemState,
    compare_substitutability,
    lint_freeness,
)

__version__ = "0.1.0"

__all__ = [
    "BLOCKING",
    "NONBLOCKING",
    "Call",
    "CheckConfig",
    "CheckReport",
    "Delete",
    "Finding",
    "Hierarchy",
    "Kind",
    "New",
    "ParseError",
    "ParseFailure",
    "Simulator",
    "StateSpaceTooLarge",
    "StructuralError",
    "SystemState",
    "Verdict",
    "build_relation",
    "check_edge",
    "check_hierarchy",
    "check_pair",
    "compare_substitutability",
    "enumerate_states",
    "format_hierarchy",
    "lift_relation",
    "lint_freeness",
    "parse",
    "parse_file",
    "precondition",
    "project",
    "replay_witness",
    "validate",
]
