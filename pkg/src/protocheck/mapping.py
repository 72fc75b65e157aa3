"""Translations between the calculi: phi, its partial inverse, and the metadata-carrying pair.

``phi`` drops transactionality and annotations. ``phi_inverse`` recovers
what the schema still holds and reports what it cannot. ``phi_plus`` and
``phi_plus_inverse`` carry the five metadata fields and invert each other on
the image of ``phi_plus``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .codec import (
    dependencies_to_json,
    failure_modes_to_json,
    metadata_to_json,
    params_from_json,
    params_to_json,
    schema_to_json,
    slot_to_json,
)
from .congruence import substitute
from .errors import (
    McpPlusNotAccepted,
    MissingMetadata,
    NotMcpTerm,
    NotSgdTerm,
    ProtocheckError,
    UnknownTransactionality,
)
from .report import VerificationReport
from .terms import (
    CollectSlot,
    ErrorT,
    ExecuteS,
    Initialize,
    Intent,
    JsonSchema,
    Nil,
    Par,
    Prompt,
    PropertySpec,
    Repl,
    Resource,
    Restrict,
    ResultT,
    SlotDef,
    Tool,
    ToolCall,
    ToolMetadata,
    ToolsList,
    TriBool,
    as_params,
    calculus_of,
    walk,
)

UNDEFINED_REASONS = {
    Resource: "NoSgdEquivalentResource",
    Prompt: "NoSgdEquivalentPrompt",
    Initialize: "NoSgdEquivalentInitialize",
    ToolsList: "NoSgdEquivalentToolsList",
}
LOSS_FIELDS = ("transactionality", "failure_modes", "dependencies", "approval_protocol")
WRITE_EFFECTS = ("write", "delete")


class NoPreimage(ProtocheckError):
    """An intermediate execution state (validation, pending approval...) has no source-level form."""


@dataclass(frozen=True)
class LossRecord:
    field: str
    detail: str

    def __post_init__(self):
        if self.field not in LOSS_FIELDS:
            raise ValueError(f"unknown loss field {self.field!r}")


@dataclass(frozen=True)
class Mapped:
    term: object
    warnings: tuple = ()
    defined = True


@dataclass(frozen=True)
class UndefinedMapping:
    reason: str
    warnings: tuple = ()
    defined = False


# ---------------------------------------------------------------------------
# helpers


def schema_of(required, optional) -> JsonSchema:
    """The object schema generated from required and optional slots."""
    props = {
        s.name: PropertySpec(s.type_name, s.description, s.possible_values or None)
        for s in tuple(required) + tuple(optional)
    }
    return JsonSchema(tuple(s.name for s in required), props)


def slots_of(schema: JsonSchema) -> tuple:
    """``(R, O)``: required slots in schema order, optional ones sorted by name."""

    def slot(name):
        p = schema.prop(name)
        return SlotDef(name, p.type_name, p.description, p.enum or ())

    required = tuple(slot(n) for n in schema.required)
    optional = tuple(slot(n) for n in schema.property_names if n not in schema.required)
    return required, optional


_SENTENCE_RE = re.compile(r"^(.*?\.)(?=\s|$)", re.DOTALL)


def first_sentence(text: str) -> str:
    """Up to and including the first period followed by whitespace or the end."""
    m = _SENTENCE_RE.match(text)
    return m.group(1) if m else text


def encode_bindings(bindings) -> dict:
    return params_to_json(as_params(bindings))


def decode_bindings(obj) -> tuple:
    return params_from_json(obj)


def _require_sgd(term):
    if calculus_of(term) not in ("sgd", "neutral"):
        raise NotSgdTerm("expected an SGD term")


# ---------------------------------------------------------------------------
# phi and phi-plus


def _forward(term, intent_fn, plus: bool):
    if isinstance(term, Intent):
        return intent_fn(term)
    if isinstance(term, ExecuteS):
        return ToolCall(term.intent_name, decode_bindings(encode_bindings(term.bindings)), plus)
    if isinstance(term, CollectSlot):
        # collection is silent on the tool side: map the filled continuation
        return _forward(substitute(term.continuation, term.slot, term.value), intent_fn, plus)
    if isinstance(term, (ResultT, ErrorT, Nil)):
        return term
    if isinstance(term, Par):
        return Par(_forward(term.left, intent_fn, plus), _forward(term.right, intent_fn, plus))
    if isinstance(term, Restrict):
        return Restrict(term.channel, _forward(term.body, intent_fn, plus))
    if isinstance(term, Repl):
        return Repl(_forward(term.body, intent_fn, plus))
    raise NotSgdTerm(f"{type(term).__name__} is not an SGD term")


def phi(sgd):
    """Map an SGD term to MCP."""
    _require_sgd(sgd)
    return _forward(sgd, lambda i: Tool(i.name, i.description, schema_of(i.required, i.optional)), False)


def plus_metadata(intent: Intent) -> ToolMetadata:
    if intent.transactional is TriBool.UNKNOWN:
        raise UnknownTransactionality(f"intent {intent.name!r} has unknown transactionality")
    t = intent.transactional is TriBool.TRUE
    return ToolMetadata(
        side_effects="write" if t else "read",
        requires_approval=t,
        failure_modes=intent.failure_modes,
        summary=first_sentence(str(intent.description)),
        dependencies=intent.dependencies,
    )


def phi_plus(sgd):
    """Map an SGD term to MCP+, keeping transactionality and annotations as metadata."""
    _require_sgd(sgd)

    def tool(i: Intent):
        return Tool(i.name, i.description, schema_of(i.required, i.optional), plus_metadata(i))

    return _forward(sgd, tool, True)


# ---------------------------------------------------------------------------
# inverses


def _backward(term, tool_fn, warnings: list):
    """Returns a term, or an ``UndefinedMapping`` for the first component with no preimage."""
    if isinstance(term, Tool):
        return tool_fn(term)
    for cls, reason in UNDEFINED_REASONS.items():
        if isinstance(term, cls):
            return UndefinedMapping(reason)
    if isinstance(term, ToolCall):
        return ExecuteS(term.name, decode_bindings(encode_bindings(term.params)), False)
    if isinstance(term, (ResultT, ErrorT, Nil)):
        return term
    if isinstance(term, Par):
        left = _backward(term.left, tool_fn, warnings)
        if isinstance(left, UndefinedMapping):
            return left
        right = _backward(term.right, tool_fn, warnings)
        return right if isinstance(right, UndefinedMapping) else Par(left, right)
    if isinstance(term, (Restrict, Repl)):
        body = _backward(term.body, tool_fn, warnings)
        if isinstance(body, UndefinedMapping):
            return body
        return Restrict(term.channel, body) if isinstance(term, Restrict) else Repl(body)
    raise NoPreimage(f"{type(term).__name__} is an intermediate state with no SGD counterpart")


def phi_inverse(mcp):
    """Partial inverse of ``phi``: ``Mapped`` with loss records, or ``UndefinedMapping``."""
    kind = calculus_of(mcp)
    if kind == "sgd":
        raise NotMcpTerm("expected an MCP term")
    if kind == "mcp+":
        raise McpPlusNotAccepted("term carries MCP+ metadata; use phi_plus_inverse")
    warnings: list = []

    def intent(tool: Tool):
        warnings.append(LossRecord("transactionality", f"{tool.name}: no machine-readable transactionality in the schema"))
        required, optional = slots_of(tool.schema)
        return Intent(tool.name, tool.description, required, optional, TriBool.UNKNOWN)

    out = _backward(mcp, intent, warnings)
    if isinstance(out, UndefinedMapping):
        return UndefinedMapping(out.reason, tuple(warnings))
    return Mapped(out, tuple(warnings))


def check_inverse_metadata(tool: Tool) -> ToolMetadata:
    """Raise ``MissingMetadata`` naming the first field (P1, P2, P3, P5 order) the inverse needs."""
    if not str(tool.description).strip():
        raise MissingMetadata("description", tool.name)
    meta = tool.metadata or ToolMetadata()
    if meta.side_effects is None:
        raise MissingMetadata("side_effects", tool.name)
    if meta.requires_approval is None:
        raise MissingMetadata("requires_approval", tool.name)
    if meta.failure_modes is None:
        raise MissingMetadata("failure_modes", tool.name)
    if meta.dependencies is None:
        raise MissingMetadata("dependencies", tool.name)
    return meta


def phi_plus_inverse(mcp_plus):
    """Inverse of ``phi_plus``; every principle's field must be present."""
    if calculus_of(mcp_plus) == "sgd":
        raise NotMcpTerm("expected an MCP+ term")

    def intent(tool: Tool):
        meta = check_inverse_metadata(tool)
        required, optional = slots_of(tool.schema)
        return Intent(
            tool.name,
            tool.description,
            required,
            optional,
            TriBool.of(meta.side_effects in WRITE_EFFECTS),
            meta.failure_modes,
            meta.dependencies,
        )

    out = _backward(mcp_plus, intent, [])
    if isinstance(out, UndefinedMapping):
        raise NoPreimage(f"no SGD counterpart: {out.reason}")
    return out


# ---------------------------------------------------------------------------
# comparison and round trips


def _strip(term):
    if isinstance(term, Intent):
        slots = lambda ss: tuple(replace(s, description="") for s in ss)  # noqa: E731
        return replace(term, description="", required=slots(term.required), optional=slots(term.optional))
    if isinstance(term, Tool):
        props = {n: replace(p, description="") for n, p in term.schema.properties}
        meta = term.metadata
        if meta is not None and meta.summary is not None:
            meta = replace(meta, summary="")
        return Tool(term.name, "", JsonSchema(term.schema.required, props), meta)
    if isinstance(term, Par):
        return Par(_strip(term.left), _strip(term.right))
    if isinstance(term, Restrict):
        return Restrict(term.channel, _strip(term.body))
    if isinstance(term, Repl):
        return Repl(_strip(term.body))
    if isinstance(term, CollectSlot):
        return CollectSlot(term.slot, term.value, _strip(term.continuation))
    return term


def structural_eq(a, b) -> bool:
    """Equality that ignores every description and summary text."""
    return _strip(a) == _strip(b)


def eq(a, b) -> bool:
    return a == b


def _intent_fields(i: Intent) -> dict:
    return {
        "name": i.name,
        "description": str(i.description),
        "required": [slot_to_json(s) for s in i.required],
        "optional": [slot_to_json(s) for s in i.optional],
        "transactional": i.transactional.value,
        "failure_modes": failure_modes_to_json(i.failure_modes),
        "dependencies": dependencies_to_json(i.dependencies),
    }


def _tool_fields(t: Tool) -> dict:
    out = {"name": t.name, "description": str(t.description), "schema": schema_to_json(t.schema)}
    meta = metadata_to_json(t.metadata) if t.metadata is not None else {}
    for key in ("side_effects", "requires_approval", "failure_modes", "summary", "dependencies"):
        out[key] = meta.get(key)
    return out


def field_diff(before: dict, after: dict) -> dict:
    return {k: [before.get(k), after.get(k)] for k in sorted(set(before) | set(after)) if before.get(k) != after.get(k)}


def round_trip_report(term, mode: str = "plain") -> VerificationReport:
    """Field-level diff of a term against its round trip through the chosen mapping pair."""
    if mode not in ("plain", "plus"):
        raise ValueError("mode must be 'plain' or 'plus'")
    kind = calculus_of(term)
    diffs, notes = {}, []
    if kind in ("sgd", "neutral"):
        intents = [t for t in walk(term) if isinstance(t, Intent)]
        for i in intents:
            if mode == "plain":
                out = phi_inverse(phi(i))
                back = out.term
                notes.extend(f"{w.field}: {w.detail}" for w in out.warnings)
            else:
                back = phi_plus_inverse(phi_plus(i))
            d = field_diff(_intent_fields(i), _intent_fields(back))
            if d:
                diffs[i.name] = d
        direction = "sgd"
    else:
        tools = [t for t in walk(term) if isinstance(t, Tool)]
        for cls, reason in UNDEFINED_REASONS.items():
            if any(isinstance(t, cls) for t in walk(term)):
                diffs[f"<{cls.__name__}>"] = {"mapping": ["defined", reason]}
        for t in tools:
            if mode == "plain":
                if t.metadata is not None:
                    raise McpPlusNotAccepted("plain round trip over an MCP+ tool; use mode='plus'")
                back = phi(phi_inverse(t).term)
            else:
                back = phi_plus(phi_plus_inverse(t))
            d = field_diff(_tool_fields(t), _tool_fields(back))
            if d:
                diffs[t.name] = d
        direction = "mcp"
    name = f"round_trip[{mode},{direction}]"
    return VerificationReport(name, passed=not diffs, details={"diff": diffs}, warnings=notes)


__all__ = [
    "LossRecord",
    "Mapped",
    "NoPreimage",
    "UndefinedMapping",
    "check_inverse_metadata",
    "decode_bindings",
    "encode_bindings",
    "eq",
    "field_diff",
    "first_sentence",
    "phi",
    "phi_inverse",
    "phi_plus",
    "phi_plus_inverse",
    "plus_metadata",
    "round_trip_report",
    "schema_of",
    "slots_of",
    "structural_eq",
]
