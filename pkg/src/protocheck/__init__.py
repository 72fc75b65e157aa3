"""Process-calculus models of SGD and MCP tool protocols, with equivalence, mapping, typing and safety checks."""

from __future__ import annotations

from .equivalence import EquivalenceVerdict, bisimilar, brute_force_bisim, trace_equivalent
from .manifest import McpRegistry, SgdRegistry, parse_mcp_manifest, parse_sgd_schema
from .mapping import phi, phi_inverse, phi_plus, phi_plus_inverse, round_trip_report, structural_eq
from .report import VerificationReport
from .security import (
    check_approval_ordering,
    check_confinement,
    check_dependency_ordering,
    check_inert_descriptions,
)
from .semantics import ExploreConfig, Lts, build_lts, step, traces
from .syntax import format_term, parse_term
from .typecheck import semantic_density, token_report, typecheck_registry

__version__ = "0.1.0"

__all__ = [
    "EquivalenceVerdict",
    "ExploreConfig",
    "Lts",
    "McpRegistry",
    "SgdRegistry",
    "VerificationReport",
    "bisimilar",
    "brute_force_bisim",
    "build_lts",
    "check_approval_ordering",
    "check_confinement",
    "check_dependency_ordering",
    "check_inert_descriptions",
    "format_term",
    "parse_mcp_manifest",
    "parse_sgd_schema",
    "parse_term",
    "phi",
    "phi_inverse",
    "phi_plus",
    "phi_plus_inverse",
    "round_trip_report",
    "semantic_density",
    "step",
    "structural_eq",
    "token_report",
    "trace_equivalent",
    "traces",
    "typecheck_registry",
]
