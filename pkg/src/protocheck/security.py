"""Safety checks over LTSs and terms: approval and dependency ordering, confinement, inert text.

The two ordering checks search the product of the LTS with a small monitor
state and return the shortest violating trace. Each has a brute-force
counterpart that enumerates paths explicitly, used as a test oracle.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass

from . import labels as L
from .report import VerificationReport
from .semantics import Lts
from .terms import (
    CollectSlot,
    Dependency,
    ExecuteS,
    Fallback,
    FailureMode,
    InertText,
    Intent,
    Par,
    Pending,
    Prompt,
    Repl,
    Resource,
    Restrict,
    ResultT,
    Token,
    Tool,
    ToolCall,
    Validate,
    Var,
    walk,
)

WRITE_EFFECTS = ("write", "delete")
INJECTION_MARKERS = (
    r"ignore (all )?(previous|prior|above) instructions",
    r"disregard (all )?(previous|prior|above)",
    r"exfiltrate",
    r"system prompt",
    r"forget (your|all) instructions",
    r"you must now",
    r"<\s*script",
)
CONFINEMENT_NOTE = (
    "syntactic escape check: the term language has no name passing, "
    "so a restricted name can only escape through an emitted payload"
)


@dataclass(frozen=True)
class TraceViolation:
    property: str
    trace: tuple
    position: int

    def to_json(self) -> dict:
        return {"property": self.property, "trace": [str(x) for x in self.trace], "position": self.position}


@dataclass(frozen=True)
class ConfinementFinding:
    channel: str
    leak_path: str
    position: str

    def to_json(self) -> dict:
        return {"channel": self.channel, "leak_path": self.leak_path, "position": self.position}


def _names(registry) -> tuple:
    return tuple(registry.tools) if hasattr(registry, "tools") else tuple(registry)


def write_tools(registry) -> frozenset:
    """Names of write- or delete-capable tools."""
    return frozenset(
        t.name for t in _names(registry) if t.metadata is not None and t.metadata.side_effects in WRITE_EFFECTS
    )


def requires_edges(registry) -> dict:
    """``{tool: set of tools it Requires}``."""
    out = {}
    for t in _names(registry):
        if t.metadata is not None:
            targets = set(t.metadata.requires_targets())
            if targets:
                out[t.name] = targets
    return out


def replayable(lts: Lts, trace) -> bool:
    """Can the LTS perform exactly this label sequence from its initial state?"""
    states = {lts.initial}
    for label in trace:
        states = {d for s in states for lab, d in lts.successors(s) if lab == label}
        if not states:
            return False
    return True


# ---------------------------------------------------------------------------
# monitors (shared by the product search and the brute-force oracle)


def _approval_monitor(writers, cap):
    def start():
        return tuple(0 for _ in writers)

    index = {n: i for i, n in enumerate(sorted(writers))}

    def advance(mon, label):
        """Returns (new monitor state, violated?)."""
        if isinstance(label, L.Approval) and label.confirm and label.tool in index:
            i = index[label.tool]
            return mon[:i] + (min(mon[i] + 1, cap),) + mon[i + 1 :], False
        if isinstance(label, L.Execute) and label.name in index:
            i = index[label.name]
            if mon[i] == 0:
                return mon, True
            return mon[:i] + (mon[i] - 1,) + mon[i + 1 :], False
        return mon, False

    return start, advance


def _dependency_monitor(edges):
    relevant = set(edges) | {t for ts in edges.values() for t in ts}

    def start():
        return frozenset()

    def advance(mon, label):
        if isinstance(label, L.Execute) and label.name in relevant:
            if not edges.get(label.name, set()) <= mon:
                return mon, True
            return mon | {label.name}, False
        return mon, False

    return start, advance


def _search(lts: Lts, start, advance, prop: str):
    """BFS over (state, monitor); the first violation found has a shortest trace."""
    init = (lts.initial, start())
    parent = {init: None}
    queue = deque([init])
    while queue:
        node = queue.popleft()
        state, mon = node
        for label, dst in lts.successors(state):
            mon2, bad = advance(mon, label)
            if bad:
                trace = [label]
                cur = node
                while parent[cur] is not None:
                    prev, lab = parent[cur]
                    trace.append(lab)
                    cur = prev
                trace.reverse()
                return TraceViolation(prop, tuple(trace), len(trace) - 1)
            nxt = (dst, mon2)
            if nxt not in parent:
                parent[nxt] = (node, label)
                queue.append(nxt)
    return None


def _report(check, lts, violation, details, header=""):
    if violation is not None:
        return VerificationReport(check, False, details=details, witness=violation.to_json(), header=header)
    if lts.truncated:
        return VerificationReport(
            check, False, inconclusive=True, details=details, header=header,
            warnings=["LTS was truncated; absence of violations is not certified"],
        )
    return VerificationReport(check, True, details=details, header=header)


def check_approval_ordering(lts: Lts, registry) -> VerificationReport:
    """Every execute of a write/delete tool needs an earlier, unconsumed approval(tool, true)."""
    writers = write_tools(registry)
    start, advance = _approval_monitor(writers, lts.num_states + 1)
    violation = _search(lts, start, advance, "ApprovalOrdering")
    return _report("approval_ordering", lts, violation, {"write_tools": sorted(writers)})


def check_dependency_ordering(lts: Lts, registry) -> VerificationReport:
    """Every execute of a tool comes after an execute of each tool it Requires."""
    edges = requires_edges(registry)
    start, advance = _dependency_monitor(edges)
    violation = _search(lts, start, advance, "DependencyOrdering")
    details = {"requires": {k: sorted(v) for k, v in sorted(edges.items())}}
    return _report("dependency_ordering", lts, violation, details)


# ---------------------------------------------------------------------------
# brute-force oracle


def all_paths(lts: Lts, max_len: int, limit: int = 10**4) -> list:
    """Label sequences of all maximal paths (or paths cut at ``max_len``)."""
    out = []
    stack = [(lts.initial, ())]
    while stack:
        state, trace = stack.pop()
        succ = lts.successors(state)
        if not succ or len(trace) >= max_len:
            out.append(trace)
            if len(out) > limit:
                raise ValueError(f"more than {limit} paths")
            continue
        for label, dst in succ:
            stack.append((dst, trace + (label,)))
    return out


def _first_violation(paths, start, advance):
    for trace in sorted(paths, key=len):
        mon = start()
        for i, label in enumerate(trace):
            mon, bad = advance(mon, label)
            if bad:
                return trace[: i + 1]
    return None


def brute_force_approval(lts: Lts, registry, max_len: int = 64):
    """``None`` if every enumerated path is fine, else a violating trace."""
    start, advance = _approval_monitor(write_tools(registry), max_len + 1)
    return _first_violation(all_paths(lts, max_len), start, advance)


def brute_force_dependency(lts: Lts, registry, max_len: int = 64):
    start, advance = _dependency_monitor(requires_edges(registry))
    return _first_violation(all_paths(lts, max_len), start, advance)


# ---------------------------------------------------------------------------
# confinement


def _payload_vars(term):
    """``(position, value)`` pairs whose value ends up in an emitted label."""
    if isinstance(term, ResultT):
        yield "ResultT.output", term.output
    elif isinstance(term, Resource):
        yield "Resource.uri", Var(term.uri[1:]) if term.uri.startswith("?") else term.uri
        yield "Resource.content", term.content
    elif isinstance(term, Prompt):
        for k, v in term.args:
            yield f"Prompt.args.{k}", v
    elif isinstance(term, CollectSlot):
        yield "CollectSlot.value", term.value


def _scope_walk(term, scope, path, out):
    for position, value in _payload_vars(term):
        if isinstance(value, Var) and value.name in scope:
            out.append(ConfinementFinding(scope[value.name], "/".join(path + [position]), position))
    if isinstance(term, Restrict):
        inner = {**scope, term.channel: term.channel}
        _scope_walk(term.body, inner, path + [f"new {term.channel}"], out)
    elif isinstance(term, Par):
        _scope_walk(term.left, scope, path + ["left"], out)
        _scope_walk(term.right, scope, path + ["right"], out)
    elif isinstance(term, Repl):
        _scope_walk(term.body, scope, path + ["bang"], out)
    elif isinstance(term, CollectSlot):
        inner = {k: v for k, v in scope.items() if k != term.slot}
        _scope_walk(term.continuation, inner, path + [f"collect {term.slot}"], out)


def check_confinement(term) -> list:
    """Restricted names appearing in an emitted payload inside their own scope."""
    out: list = []
    _scope_walk(term, {}, [], out)
    return out


def confinement_report(term) -> VerificationReport:
    findings = check_confinement(term)
    return VerificationReport(
        "confinement", not findings, findings=[f.to_json() for f in findings], header=CONFINEMENT_NOTE
    )


# ---------------------------------------------------------------------------
# inert descriptions


def _code_positions(term):
    """``(where, value)`` for every Code-sorted position of a term."""
    if isinstance(term, (ToolCall, Validate)):
        yield f"{type(term).__name__}.name", term.name
    elif isinstance(term, ExecuteS):
        yield "ExecuteS.intent_name", term.intent_name
    elif isinstance(term, Pending):
        yield "Pending.name", term.name
        for r in term.requires:
            yield "Pending.requires", r
    elif isinstance(term, Token):
        yield "Token.source", term.source
    elif isinstance(term, Restrict):
        yield "Restrict.channel", term.channel
    elif isinstance(term, (Tool, Intent)):
        yield f"{type(term).__name__}.name", term.name
        meta = getattr(term, "metadata", None)
        modes = meta.failure_modes if meta is not None else getattr(term, "failure_modes", ())
        deps = meta.dependencies if meta is not None else getattr(term, "dependencies", ())
        for m in modes or ():
            if isinstance(m, FailureMode) and isinstance(m.recovery, Fallback):
                yield "Fallback.tool", m.recovery.tool
        for d in deps or ():
            if isinstance(d, Dependency):
                yield "Dependency.tool", d.tool


def _texts(term):
    if isinstance(term, (Tool, Intent)):
        yield f"{term.name}.description", term.description
        if isinstance(term, Tool):
            for n, p in term.schema.properties:
                yield f"{term.name}.{n}.description", p.description
            if term.metadata is not None and term.metadata.summary is not None:
                yield f"{term.name}.summary", term.metadata.summary
        else:
            for s in term.slots:
                yield f"{term.name}.{s.name}.description", s.description


def check_inert_descriptions(registry, terms=(), oracle_keys=()) -> VerificationReport:
    """Two-sort lint: no String-sorted text in a Code position; injection phrases are advisory."""
    roots = [registry.as_process()] if registry is not None else []
    roots += list(terms)
    findings, warnings = [], []
    for root in roots:
        for t in walk(root):
            for where, value in _code_positions(t):
                if isinstance(value, InertText):
                    findings.append({"position": where, "value": str(value)})
            for where, text in _texts(t):
                if not isinstance(text, InertText):
                    findings.append({"position": where, "value": str(text), "problem": "text not sorted String"})
                for pat in INJECTION_MARKERS:
                    if re.search(pat, str(text), re.IGNORECASE):
                        warnings.append(f"{where}: matches advisory pattern {pat!r}")
    for key in oracle_keys:
        if isinstance(key, InertText):
            findings.append({"position": "effect_oracle.key", "value": str(key)})
    return VerificationReport(
        "inert_descriptions",
        not findings,
        findings=findings,
        warnings=sorted(set(warnings)),
        header="sort check is the guarantee; pattern warnings are advisory",
    )
