"""Command-line entry point.

Exit codes: 0 pass, 1 property failure, 2 usage or input error, 3 inconclusive.
Flags take precedence over ``PROTOCHECK_*`` environment variables, which take
precedence over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .codec import term_from_json, term_to_json
from .corpus import default_universe
from .demo import format_matrix, run_demo
from .equivalence import bisimilar, trace_equivalent
from .errors import MissingMetadata, ProtocheckError
from .manifest import (
    McpRegistry,
    SgdRegistry,
    emit_manifest,
    emit_sgd_schema,
    parse_mcp_manifest,
    parse_sgd_schema,
)
from .mapping import NoPreimage, UndefinedMapping, phi, phi_inverse, phi_plus, phi_plus_inverse
from .report import VerificationReport, combine
from .security import (
    check_approval_ordering,
    check_dependency_ordering,
    check_inert_descriptions,
    confinement_report,
)
from .semantics import ExploreConfig, Lts, build_lts, traces
from .syntax import format_term, parse_term
from .terms import Intent, Tool, walk
from .typecheck import TypecheckConfig, token_report, typecheck_registry

ENV_PREFIX = "PROTOCHECK_"
PROPERTIES = ("approval", "deps", "confine", "inert")


@dataclass
class CommandResult:
    exit_code: int
    report: str


class InputError(Exception):
    """Unreadable or ill-formed input; maps to exit code 2."""


def _env(name: str, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return default
    if cast is bool:
        return raw.strip().lower() not in ("0", "false", "no", "off", "")
    return cast(raw)


# ---------------------------------------------------------------------------
# input loading


def _read(path: str):
    """``(kind, object)`` where kind is json or text."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    if path.endswith(".json") or text.lstrip().startswith("{"):
        try:
            return "json", json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
    return "text", text


def load_term(path: str):
    kind, obj = _read(path)
    if kind == "text":
        return parse_term(obj)
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected a JSON object")
    if "kind" in obj:
        return term_from_json(obj)
    if "tools" in obj:
        return parse_mcp_manifest(obj).as_process()
    if "service_name" in obj:
        return parse_sgd_schema(obj).as_process()
    raise InputError(f"{path}: not a term, manifest or schema")


def load_registry(path: str) -> McpRegistry:
    """A manifest, or the tools occurring in a term file."""
    kind, obj = _read(path)
    if kind == "json" and isinstance(obj, dict) and "tools" in obj:
        return parse_mcp_manifest(obj)
    term = load_term(path)
    tools = {}
    for t in walk(term):
        if isinstance(t, Tool):
            tools.setdefault(t.name, t)
    return McpRegistry(tuple(tools.values()))


def _universe(args, *terms) -> dict:
    if args.universe:
        kind, obj = _read(args.universe)
        if kind != "json" or not isinstance(obj, dict):
            raise InputError("--universe must be a JSON object of name -> list of parameter maps")
        return obj
    merged: dict = {}
    for term in terms:
        for name, maps in default_universe(term, args.seed).items():
            merged.setdefault(name, maps)
    return merged


def _config(args, *terms) -> ExploreConfig:
    return ExploreConfig(
        max_states=args.max_states,
        repl_unfold_bound=args.repl_bound,
        param_universe=_universe(args, *terms),
    )


def load_lts(path: str, args, other_terms=()) -> Lts:
    kind, obj = _read(path)
    if kind == "json" and isinstance(obj, dict) and "transitions" in obj:
        return Lts.from_json(obj)
    term = load_term(path)
    return build_lts(term, _config(args, term, *other_terms))


def _peek_term(path: str):
    kind, obj = _read(path)
    if kind == "json" and isinstance(obj, dict) and "transitions" in obj:
        return None
    return load_term(path)


# ---------------------------------------------------------------------------
# output


def _emit_report(report: VerificationReport, args) -> CommandResult:
    text = report.dumps() if args.format == "json" else report.to_text()
    return CommandResult(report.exit_code, text)


def _verdict(verdict, args) -> CommandResult:
    code = 3 if verdict.inconclusive else (0 if verdict.equivalent else 1)
    obj = verdict.to_json()
    if args.format == "json":
        return CommandResult(code, json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False))
    status = "inconclusive" if verdict.inconclusive else ("equivalent" if verdict.equivalent else "not equivalent")
    lines = [f"{verdict.mode}: {status}"]
    if verdict.witness:
        lines.append("witness: " + json.dumps(verdict.witness, sort_keys=True, ensure_ascii=False))
    return CommandResult(code, "\n".join(lines))


# ---------------------------------------------------------------------------
# subcommands


def cmd_parse(args) -> CommandResult:
    term = load_term(args.file)
    if args.format == "json":
        return CommandResult(0, json.dumps(term_to_json(term), sort_keys=True, indent=2, ensure_ascii=False))
    return CommandResult(0, format_term(term))


def cmd_lts(args) -> CommandResult:
    lts = load_lts(args.file, args)
    code = 3 if lts.truncated else 0
    if args.dot:
        return CommandResult(code, lts.to_dot())
    if args.format == "json":
        return CommandResult(code, json.dumps(lts.to_json(), sort_keys=True, indent=2, ensure_ascii=False))
    lines = [f"states: {lts.num_states}", f"transitions: {len(lts.transitions)}", f"truncated: {lts.truncated}"]
    lines += [f"  {s} --{lab}--> {d}" for s, lab, d in lts.transitions]
    return CommandResult(code, "\n".join(lines))


def _map_failure(check, message, args, **details) -> CommandResult:
    report = VerificationReport(check, False, details={"reason": message, **details})
    return _emit_report(report, args)


def cmd_map(args) -> CommandResult:
    check = f"map[{args.dir}{',plus' if args.plus else ''}]"
    if args.dir == "sgd-to-mcp":
        term = load_term(args.file)
        intents = [t for t in walk(term) if isinstance(t, Intent)]
        fn = phi_plus if args.plus else phi
        return CommandResult(0, emit_manifest(McpRegistry(tuple(fn(i) for i in intents))).rstrip("\n"))
    registry = load_registry(args.file)
    term = registry.as_process()
    if args.plus:
        try:
            out = phi_plus_inverse(term)
        except MissingMetadata as exc:
            return _map_failure(check, str(exc), args, field=exc.field, tool=exc.tool)
        except NoPreimage as exc:
            return _map_failure(check, str(exc), args)
        warnings = []
    else:
        result = phi_inverse(term)
        if isinstance(result, UndefinedMapping):
            return _map_failure(check, result.reason, args, losses=[w.field for w in result.warnings])
        out, warnings = result.term, result.warnings
    for w in warnings:
        print(f"warning: {w.field}: {w.detail}", file=sys.stderr)
    intents = tuple(t for t in walk(out) if isinstance(t, Intent))
    return CommandResult(0, emit_sgd_schema(SgdRegistry(intents, service_name=Path(args.file).stem)).rstrip("\n"))


def _two_lts(args):
    ta, tb = _peek_term(args.a), _peek_term(args.b)
    others = [t for t in (ta, tb) if t is not None]
    return load_lts(args.a, args, others), load_lts(args.b, args, others)


def cmd_bisim(args) -> CommandResult:
    a, b = _two_lts(args)
    return _verdict(bisimilar(a, b, args.mode, args.unify_errors), args)


def cmd_traces(args) -> CommandResult:
    if args.b is None:
        lts = load_lts(args.a, args)
        ts = traces(lts, args.max_len)
        rows = [[str(x) for x in t] for t in ts]
        code = 3 if lts.truncated else 0
        if args.format == "json":
            return CommandResult(code, json.dumps({"partial": lts.truncated, "traces": rows}, indent=2, ensure_ascii=False))
        return CommandResult(code, "\n".join(" . ".join(r) or "<empty>" for r in rows))
    a, b = _two_lts(args)
    return _verdict(trace_equivalent(a, b, args.max_len, args.unify_errors), args)


def _tc_config(args) -> TypecheckConfig:
    try:
        return TypecheckConfig(tau=args.tau, summary_ratio=args.summary_ratio, k=args.k)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_typecheck(args) -> CommandResult:
    return _emit_report(typecheck_registry(load_registry(args.file), _tc_config(args)), args)


def cmd_tokens(args) -> CommandResult:
    rep = token_report(load_registry(args.file), _tc_config(args))
    report = VerificationReport("tokens", rep.flag, details=rep.to_json(), warnings=list(rep.warnings))
    return _emit_report(report, args)


def cmd_verify(args) -> CommandResult:
    registry = load_registry(args.file)
    kind, obj = _read(args.file)
    term = registry.as_process() if kind == "json" and "tools" in obj else load_term(args.file)
    wanted = PROPERTIES if args.property == "all" else (args.property,)
    reports = []
    lts = None
    if {"approval", "deps"} & set(wanted):
        lts = build_lts(term, _config(args, term))
    if "approval" in wanted:
        reports.append(check_approval_ordering(lts, registry))
    if "deps" in wanted:
        reports.append(check_dependency_ordering(lts, registry))
    if "confine" in wanted:
        reports.append(confinement_report(term))
    if "inert" in wanted:
        reports.append(check_inert_descriptions(registry, terms=[term]))
    report = reports[0] if len(reports) == 1 else combine("verify", reports)
    return _emit_report(report, args)


def cmd_demo(args) -> CommandResult:
    rows = run_demo()
    code = 0 if all(r.passed for r in rows) else 1
    if args.format == "json":
        return CommandResult(code, json.dumps([r.to_json() for r in rows], indent=2, ensure_ascii=False))
    return CommandResult(code, format_matrix(rows))


# ---------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=("json", "text"), default=_env("FORMAT", "text"))
    p.add_argument("--seed", type=int, default=_env("SEED", 0, int), help="seed for generated parameter maps")
    p.add_argument("--max-states", type=int, default=_env("MAX_STATES", 10000, int))
    p.add_argument("--repl-bound", type=int, default=_env("REPL_BOUND", 2, int))
    p.add_argument("--mode", choices=("weak", "strong"), default=_env("MODE", "weak"))
    p.add_argument(
        "--unify-errors", action=argparse.BooleanOptionalAction, default=_env("UNIFY_ERRORS", True, bool),
        help="treat MissingSlots and ValidationError as the same observable action",
    )
    p.add_argument("--universe", help="JSON file mapping tool/intent names to lists of parameter maps")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="protocheck", description="Process-calculus checks for SGD and MCP tool protocols.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse a term and print it as JSON or concrete syntax")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("lts", parents=[common], help="build the labelled transition system of a term")
    p.add_argument("file")
    p.add_argument("--dot", action="store_true", help="emit Graphviz text")
    p.set_defaults(func=cmd_lts)

    p = sub.add_parser("map", parents=[common], help="translate between SGD schemas and MCP manifests")
    p.add_argument("file")
    p.add_argument("--dir", choices=("sgd-to-mcp", "mcp-to-sgd"), required=True)
    p.add_argument("--plus", action="store_true", help="use the metadata-preserving mapping")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("bisim", parents=[common], help="check bisimilarity of two terms or LTS files")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_bisim)

    p = sub.add_parser("traces", parents=[common], help="list traces of one input or compare two")
    p.add_argument("a")
    p.add_argument("b", nargs="?")
    p.add_argument("--max-len", type=int, default=6)
    p.set_defaults(func=cmd_traces)

    for name, func, help_ in (
        ("typecheck", cmd_typecheck, "check the five MCP+ principles"),
        ("tokens", cmd_tokens, "progressive-disclosure token report"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("file")
        p.add_argument("--tau", type=float, default=_env("TAU", 0.3, float))
        p.add_argument("--summary-ratio", type=float, default=_env("SUMMARY_RATIO", 0.1, float))
        p.add_argument("-k", type=float, default=_env("K", 0.1, float))
        p.set_defaults(func=func)

    p = sub.add_parser("verify", parents=[common], help="security properties of a manifest or term")
    p.add_argument("file")
    p.add_argument("--property", choices=PROPERTIES + ("all",), default="all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo", parents=[common], help="replay the worked examples as a pass/fail matrix")
    p.set_defaults(func=cmd_demo)
    return parser


def run(argv=None) -> CommandResult:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse has already printed usage
        return CommandResult(2 if exc.code else 0, "")
    try:
        return args.func(args)
    except (InputError, ProtocheckError, ValueError, KeyError) as exc:
        return CommandResult(2, f"error: {exc}")


def main(argv=None) -> int:
    result = run(argv)
    if result.report:
        stream = sys.stderr if result.exit_code == 2 else sys.stdout
        print(result.report, file=stream)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
