"""Process terms for the SGD, MCP and MCP+ calculi.

A single term type covers both calculi; :func:`calculus_of` tells them apart.
All terms are frozen dataclasses, so they hash and compare structurally and
can be shared freely between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .errors import DuplicateSlotError, MixedCalculusError

SLOT_TYPES = ("string", "integer", "number", "boolean", "date")
SIDE_EFFECTS = ("read", "write", "delete", "none")
RELATIONS = ("Requires", "ProducesInputFor", "ExclusiveWith")


class InertText(str):
    """Text of sort String: it may be displayed but never used as code.

    Descriptions, summaries and messages are tagged on construction; the
    inert-description lint rejects any tagged value found in a code position.
    """

    __slots__ = ()


def inert(text: str) -> InertText:
    return text if isinstance(text, InertText) else InertText(text)


@dataclass(frozen=True)
class Var:
    """A name reference (slot variable or channel name) inside a value position."""

    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


Literal = Union[str, int, float, bool, Var]
Params = tuple  # tuple[tuple[str, Literal], ...], sorted by key


def as_params(mapping: Mapping[str, Literal] | Iterable[tuple[str, Literal]] | None) -> Params:
    """Freeze a parameter mapping into a key-sorted tuple of pairs."""
    if mapping is None:
        return ()
    items = mapping.items() if isinstance(mapping, Mapping) else mapping
    pairs = tuple(sorted((str(k), v) for k, v in items))
    keys = [k for k, _ in pairs]
    if len(set(keys)) != len(keys):
        raise ValueError(f"duplicate parameter keys in {keys}")
    for _, v in pairs:
        if not isinstance(v, (str, int, float, bool, Var)):
            raise TypeError(f"unsupported literal {v!r}")
    return pairs


class TriBool(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "?"

    @classmethod
    def of(cls, value: bool | None) -> TriBool:
        if value is None:
            return cls.UNKNOWN
        return cls.TRUE if value else cls.FALSE

    def as_bool(self) -> bool | None:
        return {TriBool.TRUE: True, TriBool.FALSE: False}.get(self)


def _set(obj, name, value):
    object.__setattr__(obj, name, value)


# ---------------------------------------------------------------------------
# schema and metadata records


@dataclass(frozen=True)
class SlotDef:
    name: str
    type_name: str = "string"
    description: str = ""
    possible_values: tuple = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("slot name must be non-empty")
        if self.type_name not in SLOT_TYPES:
            raise ValueError(f"slot {self.name!r}: unknown type {self.type_name!r}")
        vals = tuple(self.possible_values)
        if len(set(vals)) != len(vals):
            raise ValueError(f"slot {self.name!r}: possible_values are not distinct")
        _set(self, "possible_values", vals)
        _set(self, "description", inert(self.description))


@dataclass(frozen=True)
class PropertySpec:
    type_name: str
    description: str = ""
    enum: tuple | None = None

    def __post_init__(self):
        if self.type_name not in SLOT_TYPES:
            raise ValueError(f"unknown property type {self.type_name!r}")
        if self.enum is not None:
            _set(self, "enum", tuple(self.enum))
        _set(self, "description", inert(self.description))


@dataclass(frozen=True)
class JsonSchema:
    """The object-schema subset used by tools: required names plus typed properties."""

    required: tuple = ()
    properties: tuple = ()  # tuple[tuple[str, PropertySpec], ...] sorted by name

    def __post_init__(self):
        props = self.properties
        if isinstance(props, Mapping):
            props = props.items()
        props = tuple(sorted(props, key=lambda kv: kv[0]))
        names = [n for n, _ in props]
        if len(set(names)) != len(names):
            raise DuplicateSlotError(f"duplicate property names in {names}")
        required = tuple(self.required)
        if len(set(required)) != len(required):
            raise DuplicateSlotError(f"duplicate required names in {list(required)}")
        missing = [r for r in required if r not in names]
        if missing:
            raise ValueError(f"required names without a property: {missing}")
        _set(self, "properties", props)
        _set(self, "required", required)

    def prop(self, name: str) -> PropertySpec:
        return dict(self.properties)[name]

    @property
    def property_names(self) -> tuple:
        return tuple(n for n, _ in self.properties)


@dataclass(frozen=True)
class Retry:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise ValueError(f"Retry needs a positive count, got {self.n!r}")


@dataclass(frozen=True)
class Fallback:
    tool: str


@dataclass(frozen=True)
class UserPrompt:
    message: str

    def __post_init__(self):
        _set(self, "message", inert(self.message))


@dataclass(frozen=True)
class Abort:
    pass


RecoveryStrategy = Union[Retry, Fallback, UserPrompt, Abort]


@dataclass(frozen=True)
class FailureMode:
    error_type: str
    recovery: RecoveryStrategy


@dataclass(frozen=True)
class Dependency:
    tool: str
    relation: str = "Requires"

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")


@dataclass(frozen=True)
class ToolMetadata:
    """The five-principle metadata of an MCP+ tool.

    A field set to ``None`` is absent; this is distinct from an empty list.
    """

    side_effects: str | None = None
    requires_approval: bool | None = None
    failure_modes: tuple | None = None
    summary: str | None = None
    dependencies: tuple | None = None

    def __post_init__(self):
        if self.side_effects is not None and self.side_effects not in SIDE_EFFECTS:
            raise ValueError(f"unknown side_effects {self.side_effects!r}")
        if self.failure_modes is not None:
            _set(self, "failure_modes", tuple(self.failure_modes))
        if self.dependencies is not None:
            _set(self, "dependencies", tuple(self.dependencies))
        if self.summary is not None:
            _set(self, "summary", inert(self.summary))

    def requires_targets(self) -> tuple:
        return tuple(d.tool for d in self.dependencies or () if d.relation == "Requires")


# ---------------------------------------------------------------------------
# process terms


class Process:
    """Marker base class of every process term."""

    __slots__ = ()


@dataclass(frozen=True)
class Nil(Process):
    pass


NIL = Nil()


@dataclass(frozen=True)
class Intent(Process):
    name: str
    description: str = ""
    required: tuple = ()
    optional: tuple = ()
    transactional: TriBool = TriBool.FALSE
    failure_modes: tuple = ()
    dependencies: tuple = ()

    def __post_init__(self):
        _set(self, "required", tuple(self.required))
        _set(self, "optional", tuple(self.optional))
        _set(self, "failure_modes", tuple(self.failure_modes))
        _set(self, "dependencies", tuple(self.dependencies))
        _set(self, "description", inert(self.description))
        if isinstance(self.transactional, bool):
            _set(self, "transactional", TriBool.of(self.transactional))
        names = [s.name for s in self.required + self.optional]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise DuplicateSlotError(f"intent {self.name!r}: duplicate slots {dupes}")

    @property
    def slots(self) -> tuple:
        return self.required + self.optional


@dataclass(frozen=True)
class CollectSlot(Process):
    slot: str
    value: Literal
    continuation: Process = NIL


@dataclass(frozen=True)
class ExecuteS(Process):
    intent_name: str
    bindings: Params = ()
    transactional: bool = False

    def __post_init__(self):
        _set(self, "bindings", as_params(self.bindings))


@dataclass(frozen=True)
class Tool(Process):
    name: str
    description: str = ""
    schema: JsonSchema = field(default_factory=JsonSchema)
    metadata: ToolMetadata | None = None

    def __post_init__(self):
        _set(self, "description", inert(self.description))

    @property
    def is_plus(self) -> bool:
        return self.metadata is not None


@dataclass(frozen=True)
class Resource(Process):
    uri: str
    content: Literal = ""


@dataclass(frozen=True)
class Prompt(Process):
    template: str
    args: Params = ()

    def __post_init__(self):
        _set(self, "args", as_params(self.args))


@dataclass(frozen=True)
class Initialize(Process):
    caps: tuple = ()

    def __post_init__(self):
        _set(self, "caps", tuple(sorted(set(self.caps))))


@dataclass(frozen=True)
class ToolsList(Process):
    tools: tuple = ()
    caps: tuple = ()
    progressive: bool = False

    def __post_init__(self):
        _set(self, "tools", tuple(self.tools))
        _set(self, "caps", tuple(sorted(set(self.caps))))
        for t in self.tools:
            if not isinstance(t, Tool):
                raise TypeError("ToolsList holds Tool terms only")


@dataclass(frozen=True)
class ToolDetail(Process):
    """Summary-level discovery entry; ``detail(n)`` exposes the full tool."""

    tool: Tool


@dataclass(frozen=True)
class ToolCall(Process):
    """A validated invocation awaiting execution.

    ``plus`` marks calls of MCP+ tools, whose execution leaves a completion
    token that dependent tools synchronise on.
    """

    name: str
    params: Params = ()
    plus: bool = False

    def __post_init__(self):
        _set(self, "params", as_params(self.params))


@dataclass(frozen=True)
class Validate(Process):
    name: str
    params: Params
    schema: JsonSchema
    metadata: ToolMetadata | None = None

    def __post_init__(self):
        _set(self, "params", as_params(self.params))


@dataclass(frozen=True)
class Pending(Process):
    """An MCP+ call past validation still waiting for approval and/or required tokens."""

    name: str
    params: Params = ()
    approval: bool = False
    requires: tuple = ()

    def __post_init__(self):
        _set(self, "params", as_params(self.params))
        _set(self, "requires", tuple(sorted(set(self.requires))))


@dataclass(frozen=True)
class Token(Process):
    """Persistent evidence that tool ``source`` has executed."""

    source: str


@dataclass(frozen=True)
class ResultT(Process):
    output: Literal


@dataclass(frozen=True)
class ErrorT(Process):
    error_type: str
    message: str = ""

    def __post_init__(self):
        _set(self, "message", inert(self.message))


@dataclass(frozen=True)
class Par(Process):
    left: Process
    right: Process


@dataclass(frozen=True)
class Restrict(Process):
    channel: str
    body: Process


@dataclass(frozen=True)
class Repl(Process):
    body: Process


def par(*terms: Process) -> Process:
    """Right-nested parallel composition; ``par()`` is Nil."""
    if not terms:
        return NIL
    result = terms[-1]
    for t in reversed(terms[:-1]):
        result = Par(t, result)
    return result


def children(term: Process) -> tuple:
    if isinstance(term, Par):
        return (term.left, term.right)
    if isinstance(term, (Restrict, Repl)):
        return (term.body,)
    if isinstance(term, CollectSlot):
        return (term.continuation,)
    if isinstance(term, ToolsList):
        return term.tools
    if isinstance(term, ToolDetail):
        return (term.tool,)
    return ()


def walk(term: Process):
    """Pre-order iteration over a term and all its subterms."""
    stack = [term]
    while stack:
        t = stack.pop()
        yield t
        stack.extend(reversed(children(t)))


_SGD = (Intent, CollectSlot, ExecuteS)
_MCP = (Tool, Resource, Prompt, Initialize, ToolsList, ToolDetail, ToolCall, Validate)
_MCP_PLUS = (Pending, Token)


def calculus_of(term: Process) -> str:
    """Classify a term as ``"sgd"``, ``"mcp"``, ``"mcp+"`` or ``"neutral"``.

    Neutral terms use only the shared constructors (Result, Error, Par,
    restriction, replication, Nil). Mixing SGD and MCP constructors raises
    :class:`MixedCalculusError`.
    """
    sgd = mcp = plus = False
    for t in walk(term):
        if isinstance(t, _SGD):
            sgd = True
        elif isinstance(t, _MCP_PLUS):
            plus = True
        elif isinstance(t, _MCP):
            mcp = True
            if isinstance(t, (Tool, Validate)) and t.metadata is not None:
                plus = True
            if isinstance(t, ToolCall) and t.plus:
                plus = True
    if sgd and (mcp or plus):
        raise MixedCalculusError("term mixes SGD and MCP constructors")
    if sgd:
        return "sgd"
    if plus:
        return "mcp+"
    if mcp:
        return "mcp"
    return "neutral"
