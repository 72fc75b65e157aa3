"""Operational semantics of SGD and MCP terms and finite LTS construction.

Step functions return successors sorted by (label, target) with targets in
canonical form. ``build_lts`` explores breadth-first over canonical states.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

from . import labels as L
from .codec import (
    dumps,
    label_from_json,
    label_key,
    label_to_json,
    literal_to_json,
    params_to_json,
    term_from_json,
    term_key,
    term_to_json,
)
from .congruence import canonicalize, expand_replication, parallel_components, substitute
from .errors import ExploreError, NotMcpTerm, NotSgdTerm
from .terms import (
    NIL,
    CollectSlot,
    ErrorT,
    ExecuteS,
    Initialize,
    Intent,
    JsonSchema,
    Nil,
    Par,
    Pending,
    Process,
    Prompt,
    Repl,
    Resource,
    Restrict,
    ResultT,
    Token,
    Tool,
    ToolCall,
    ToolDetail,
    ToolsList,
    TriBool,
    Validate,
    as_params,
    calculus_of,
    par,
)

CANCELLED = "cancelled"


def default_oracle(name: str, params) -> str:
    """Stand-in for the backend: a short digest of the call, never the params themselves."""
    digest = hashlib.sha256(dumps([name, params_to_json(params)]).encode()).hexdigest()
    return f"{name}#{digest[:8]}"


def table_oracle(table: Mapping, fallback: Callable = default_oracle) -> Callable:
    """Oracle answering from ``{(name, params): output}``; other calls go to ``fallback``."""
    frozen = {(n, as_params(p)): v for (n, p), v in table.items()}

    def oracle(name, params):
        key = (name, as_params(params))
        return frozen[key] if key in frozen else fallback(name, params)

    return oracle


@dataclass
class ExploreConfig:
    max_states: int = 10000
    repl_unfold_bound: int = 2
    param_universe: Mapping = field(default_factory=dict)  # name -> list of param maps
    effect_oracle: Callable = default_oracle
    server_tools: tuple = ()
    server_caps: tuple = ()
    list_filters: tuple = ("",)

    def __post_init__(self):
        if self.max_states < 1:
            raise ValueError("max_states must be positive")
        if self.repl_unfold_bound < 0:
            raise ValueError("repl_unfold_bound must be non-negative")
        self.param_universe = {
            name: tuple(as_params(p) for p in maps) for name, maps in self.param_universe.items()
        }

    def params_for(self, name: str) -> tuple:
        try:
            return self.param_universe[name]
        except KeyError:
            raise ExploreError(f"no parameter maps for {name!r} in param_universe") from None


# ---------------------------------------------------------------------------
# conformance


def violations(params, schema: JsonSchema) -> tuple:
    """``(missing required names, names whose value is outside their enum)``."""
    params = dict(as_params(params))
    missing = tuple(r for r in schema.required if r not in params)
    bad = []
    for name, spec in schema.properties:
        if name in params and spec.enum is not None and not _member(params[name], spec.enum):
            bad.append(name)
    return missing, tuple(bad)


def _member(value, allowed) -> bool:
    key = dumps(literal_to_json(value))
    return any(dumps(literal_to_json(a)) == key for a in allowed)


def conforms(params, schema: JsonSchema) -> bool:
    missing, bad = violations(params, schema)
    return not missing and not bad


def violation_message(missing, bad=()) -> str:
    parts = []
    if missing:
        parts.append("missing: " + ",".join(missing))
    if bad:
        parts.append("enum: " + ",".join(bad))
    return "; ".join(parts)


# ---------------------------------------------------------------------------
# step functions


def _finish(succ) -> list:
    out = {}
    for label, target in succ:
        target = canonicalize(target)
        out[(label_key(label), term_key(target))] = (label, target)
    return [out[k] for k in sorted(out)]


def _emit(term):
    if isinstance(term, ResultT):
        return [(L.Result(term.output), NIL)]
    if isinstance(term, ErrorT):
        return [(L.Error(term.error_type, str(term.message)), NIL)]
    return None


def _structural(term, config, step_one):
    """PAR and RES congruence plus replication, shared by both calculi."""
    if isinstance(term, Par):
        comps = parallel_components(term)
        succ = []
        for i, comp in enumerate(comps):
            for label, target in step_one(comp, config):
                succ.append((label, par(*comps[:i], target, *comps[i + 1 :])))
        return succ
    if isinstance(term, Restrict):
        return [(label, Restrict(term.channel, t)) for label, t in step_one(term.body, config)]
    if isinstance(term, Repl):
        unfolded, _ = expand_replication(term, config.repl_unfold_bound)
        return step_one(unfolded, config)
    return None


def _sgd(term, config):
    if isinstance(term, Nil):
        return []
    emitted = _emit(term)
    if emitted is not None:
        return emitted
    structural = _structural(term, config, _sgd)
    if structural is not None:
        return structural
    if isinstance(term, Intent):
        req = [s.name for s in term.required]
        succ = []
        for params in config.params_for(term.name):
            keys = {k for k, _ in params}
            missing = [r for r in req if r not in keys]
            label = L.Invoke(term.name, params)
            if missing:
                succ.append((label, ErrorT("MissingSlots", violation_message(missing))))
            else:
                tx = term.transactional is TriBool.TRUE
                succ.append((label, ExecuteS(term.name, params, tx)))
        return succ
    if isinstance(term, CollectSlot):
        return [(L.Collect(term.slot, term.value), substitute(term.continuation, term.slot, term.value))]
    if isinstance(term, ExecuteS):
        # transactional or not, approval is granted by the environment
        output = config.effect_oracle(term.intent_name, term.bindings)
        return [(L.Execute(term.intent_name), ResultT(output))]
    raise NotSgdTerm(f"{type(term).__name__} is not an SGD term")


def sgd_step(term: Process, config: ExploreConfig | None = None) -> list:
    """Successors of an SGD term as ``[(label, canonical target)]``."""
    config = config or ExploreConfig()
    return _finish(_sgd(term, config))


def _after_approval(name, params, requires) -> Process:
    if requires:
        return Pending(name, params, False, requires)
    return ToolCall(name, params, True)


def matches(tool: Tool, filter_: str) -> bool:
    """Case-insensitive substring match on the tool name or summary."""
    needle = filter_.lower()
    summary = tool.metadata.summary if tool.metadata and tool.metadata.summary else ""
    return needle in tool.name.lower() or needle in summary.lower()


def _sync(comps) -> list:
    """Pending calls in a parallel group consume tokens of the tools they require."""
    tokens = {c.source for c in comps if isinstance(c, Token)}
    succ = []
    for i, comp in enumerate(comps):
        if isinstance(comp, Pending) and not comp.approval:
            for r in comp.requires:
                if r in tokens:
                    rest = tuple(x for x in comp.requires if x != r)
                    target = _after_approval(comp.name, comp.params, rest)
                    succ.append((L.Requires(r), par(*comps[:i], target, *comps[i + 1 :])))
    return succ


def _mcp(term, config):
    if isinstance(term, Nil):
        return []
    emitted = _emit(term)
    if emitted is not None:
        return emitted
    structural = _structural(term, config, _mcp)
    if structural is not None:
        if isinstance(term, Par):
            structural += _sync(parallel_components(term))
        return structural
    if isinstance(term, Tool):
        return [
            (L.Call(term.name, params), Validate(term.name, params, term.schema, term.metadata))
            for params in config.params_for(term.name)
        ]
    if isinstance(term, Validate):
        missing, bad = violations(term.params, term.schema)
        if missing or bad:
            return [(L.Tau("validate"), ErrorT("ValidationError", violation_message(missing, bad)))]
        meta = term.metadata
        if meta is None:
            return [(L.Tau("validate"), ToolCall(term.name, term.params))]
        requires = meta.requires_targets()
        if meta.requires_approval:
            return [(L.Tau("validate"), Pending(term.name, term.params, True, requires))]
        return [(L.Tau("validate"), _after_approval(term.name, term.params, requires))]
    if isinstance(term, Pending):
        if term.approval:
            return [
                (L.Approval(term.name, True), _after_approval(term.name, term.params, term.requires)),
                (L.Approval(term.name, False), ResultT(CANCELLED)),
            ]
        return []  # waits for tokens at the enclosing parallel group
    if isinstance(term, ToolCall):
        output = config.effect_oracle(term.name, term.params)
        target = Par(ResultT(output), Token(term.name)) if term.plus else ResultT(output)
        return [(L.Execute(term.name), target)]
    if isinstance(term, Resource):
        return [(L.Read(term.uri), ResultT(term.content))]
    if isinstance(term, (Prompt, Token)):
        return []
    if isinstance(term, Initialize):
        caps = set(term.caps) & set(config.server_caps)
        return [(L.Tau("negotiate"), ToolsList(tuple(config.server_tools), tuple(caps)))]
    if isinstance(term, ToolsList):
        succ = []
        for f in config.list_filters:
            found = [t for t in term.tools if matches(t, f)]
            if term.progressive:
                found = [ToolDetail(t) for t in found]
            succ.append((L.List(f), par(*found)))
        return succ
    if isinstance(term, ToolDetail):
        return [(L.Detail(term.tool.name), term.tool)]
    raise NotMcpTerm(f"{type(term).__name__} is not an MCP term")


def mcp_step(term: Process, config: ExploreConfig | None = None) -> list:
    """Successors of an MCP or MCP+ term as ``[(label, canonical target)]``."""
    config = config or ExploreConfig()
    return _finish(_mcp(term, config))


def step(term: Process, config: ExploreConfig | None = None) -> list:
    """Dispatch on the calculus of ``term``."""
    if calculus_of(term) == "sgd":
        return sgd_step(term, config)
    return mcp_step(term, config)


# ---------------------------------------------------------------------------
# LTS


@dataclass
class Lts:
    states: list
    initial: int = 0
    transitions: list = field(default_factory=list)  # (src, label, dst)
    truncated: bool = False

    def __post_init__(self):
        n = len(self.states)
        if not 0 <= self.initial < max(n, 1):
            raise ValueError("initial state out of range")
        for src, _, dst in self.transitions:
            if not (0 <= src < n and 0 <= dst < n):
                raise ValueError(f"transition ({src}, {dst}) out of range")
        self._succ = None

    @classmethod
    def from_edges(cls, n: int, edges, initial: int = 0, truncated: bool = False) -> Lts:
        """Hand-built LTS over ``n`` anonymous states."""
        return cls([None] * n, initial, [tuple(e) for e in edges], truncated)

    @property
    def num_states(self) -> int:
        return len(self.states)

    def successors(self, state: int) -> list:
        if self._succ is None:
            self._succ = [[] for _ in self.states]
            for src, label, dst in self.transitions:
                self._succ[src].append((label, dst))
        return self._succ[state]

    def labels(self) -> set:
        return {label for _, label, _ in self.transitions}

    def to_json(self) -> dict:
        return {
            "states": [term_to_json(s) if s is not None else None for s in self.states],
            "initial": self.initial,
            "transitions": [[s, label_to_json(lab), d] for s, lab, d in self.transitions],
            "truncated": self.truncated,
        }

    @classmethod
    def from_json(cls, obj: dict) -> Lts:
        return cls(
            [term_from_json(s) if s is not None else None for s in obj["states"]],
            obj.get("initial", 0),
            [(s, label_from_json(lab), d) for s, lab, d in obj["transitions"]],
            bool(obj.get("truncated", False)),
        )

    def to_dot(self) -> str:
        lines = ["digraph lts {", "  rankdir=LR;", f'  init [shape=point]; init -> {self.initial};']
        for i in range(self.num_states):
            lines.append(f"  {i} [shape=circle];")
        for s, lab, d in self.transitions:
            text = str(lab).replace("\\", "\\\\").replace('"', '\\"')
            lines.append(f'  {s} -> {d} [label="{text}"];')
        lines.append("}")
        return "\n".join(lines)


def build_lts(term: Process, config: ExploreConfig | None = None) -> Lts:
    """Breadth-first exploration from ``term`` over canonical states."""
    config = config or ExploreConfig()
    calculus = calculus_of(term)
    step_fn = sgd_step if calculus == "sgd" else mcp_step
    start, truncated = expand_replication(term, config.repl_unfold_bound)
    start = canonicalize(start)
    states, index = [start], {term_key(start): 0}
    transitions = []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for label, target in step_fn(states[i], config):
            key = term_key(target)
            j = index.get(key)
            if j is None:
                if len(states) >= config.max_states:
                    truncated = True
                    continue
                j = index[key] = len(states)
                states.append(target)
                queue.append(j)
            transitions.append((i, label, j))
    return Lts(states, 0, transitions, truncated)


@dataclass(frozen=True)
class TraceSet:
    traces: frozenset
    partial: bool = False

    def __contains__(self, trace) -> bool:
        return tuple(trace) in self.traces

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(sorted(self.traces, key=lambda t: (len(t), [label_key(x) for x in t])))


def traces(lts: Lts, max_len: int) -> TraceSet:
    """All label sequences of length at most ``max_len`` from the initial state."""
    if max_len < 0:
        raise ValueError("max_len must be non-negative")
    seen = {()}
    frontier = {(lts.initial, ())}
    for _ in range(max_len):
        nxt = set()
        for state, trace in frontier:
            for label, dst in lts.successors(state):
                t = trace + (label,)
                seen.add(t)
                nxt.add((dst, t))
        frontier = nxt
    return TraceSet(frozenset(seen), lts.truncated)
