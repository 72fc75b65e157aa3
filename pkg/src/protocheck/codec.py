"""JSON encoding of terms, labels and metadata (tagged unions with a ``kind`` field)."""

from __future__ import annotations

import json
from typing import Any

from . import labels as L
from .errors import MalformedManifest, UnknownVariantError
from .terms import (
    NIL,
    Abort,
    CollectSlot,
    Dependency,
    ErrorT,
    ExecuteS,
    Fallback,
    FailureMode,
    InertText,
    Initialize,
    Intent,
    JsonSchema,
    Nil,
    Par,
    Pending,
    Process,
    Prompt,
    PropertySpec,
    Repl,
    Resource,
    Restrict,
    ResultT,
    Retry,
    SlotDef,
    Token,
    Tool,
    ToolCall,
    ToolDetail,
    ToolMetadata,
    ToolsList,
    TriBool,
    UserPrompt,
    Validate,
    Var,
    inert,
)


def dumps(obj: Any) -> str:
    """Canonical compact JSON: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def literal_to_json(value):
    if isinstance(value, Var):
        return {"var": value.name}
    return str(value) if isinstance(value, str) else value


def literal_from_json(value):
    if isinstance(value, dict):
        if set(value) != {"var"}:
            raise ValueError(f"bad literal {value!r}")
        return Var(value["var"])
    if isinstance(value, (str, int, float, bool)):
        return value
    raise ValueError(f"bad literal {value!r}")


def params_to_json(params) -> dict:
    return {k: literal_to_json(v) for k, v in params}


def params_from_json(obj) -> tuple:
    return tuple((k, literal_from_json(v)) for k, v in (obj or {}).items())


# -- schema / metadata -------------------------------------------------------


def property_to_json(prop: PropertySpec) -> dict:
    out: dict = {"type": prop.type_name}
    if prop.description:
        out["description"] = str(prop.description)
    if prop.enum is not None:
        out["enum"] = [literal_to_json(v) for v in prop.enum]
    return out


def schema_to_json(schema: JsonSchema) -> dict:
    return {
        "type": "object",
        "required": list(schema.required),
        "properties": {n: property_to_json(p) for n, p in schema.properties},
    }


def schema_from_json(obj: dict) -> JsonSchema:
    props = {}
    for name, p in (obj.get("properties") or {}).items():
        enum = p.get("enum")
        props[name] = PropertySpec(
            type_name=p["type"],
            description=p.get("description", ""),
            enum=None if enum is None else tuple(literal_from_json(v) for v in enum),
        )
    return JsonSchema(required=tuple(obj.get("required") or ()), properties=props)


def recovery_to_json(rec) -> dict:
    if isinstance(rec, Retry):
        return {"kind": "retry", "n": rec.n}
    if isinstance(rec, Fallback):
        return {"kind": "fallback", "tool": rec.tool}
    if isinstance(rec, UserPrompt):
        return {"kind": "user_prompt", "message": str(rec.message)}
    if isinstance(rec, Abort):
        return {"kind": "abort"}
    raise TypeError(f"not a recovery strategy: {rec!r}")


def recovery_from_json(obj: dict):
    try:
        kind = obj["kind"]
        if kind == "retry":
            return Retry(obj["n"])
        if kind == "fallback":
            return Fallback(obj["tool"])
        if kind == "user_prompt":
            return UserPrompt(obj["message"])
        if kind == "abort":
            return Abort()
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedManifest(f"bad recovery strategy {obj!r}: {exc}") from exc
    raise MalformedManifest(f"unknown recovery kind {obj.get('kind')!r}")


def failure_modes_to_json(modes) -> list:
    return [{"error": m.error_type, "recovery": recovery_to_json(m.recovery)} for m in modes]


def failure_modes_from_json(items) -> tuple:
    try:
        return tuple(FailureMode(i["error"], recovery_from_json(i["recovery"])) for i in items)
    except (KeyError, TypeError) as exc:
        raise MalformedManifest(f"bad failure_modes entry: {exc}") from exc


def dependencies_to_json(deps) -> list:
    return [{"tool": d.tool, "relation": d.relation} for d in deps]


def dependencies_from_json(items) -> tuple:
    try:
        return tuple(Dependency(i["tool"], i["relation"]) for i in items)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedManifest(f"bad dependencies entry: {exc}") from exc


def metadata_to_json(meta: ToolMetadata) -> dict:
    out: dict = {}
    if meta.side_effects is not None:
        out["side_effects"] = meta.side_effects
    if meta.requires_approval is not None:
        out["requires_approval"] = meta.requires_approval
    if meta.failure_modes is not None:
        out["failure_modes"] = failure_modes_to_json(meta.failure_modes)
    if meta.summary is not None:
        out["summary"] = str(meta.summary)
    if meta.dependencies is not None:
        out["dependencies"] = dependencies_to_json(meta.dependencies)
    return out


def metadata_from_json(obj: dict) -> ToolMetadata:
    if not isinstance(obj, dict):
        raise MalformedManifest("x-mcp-plus must be an object")
    unknown = set(obj) - {"side_effects", "requires_approval", "failure_modes", "summary", "dependencies"}
    if unknown:
        raise MalformedManifest(f"unknown x-mcp-plus keys {sorted(unknown)}")
    try:
        return ToolMetadata(
            side_effects=obj.get("side_effects"),
            requires_approval=obj.get("requires_approval"),
            failure_modes=None if "failure_modes" not in obj else failure_modes_from_json(obj["failure_modes"]),
            summary=obj.get("summary"),
            dependencies=None if "dependencies" not in obj else dependencies_from_json(obj["dependencies"]),
        )
    except ValueError as exc:
        raise MalformedManifest(str(exc)) from exc


def slot_to_json(slot: SlotDef) -> dict:
    return {
        "name": slot.name,
        "type": slot.type_name,
        "description": str(slot.description),
        "possible_values": [literal_to_json(v) for v in slot.possible_values],
    }


def slot_from_json(obj: dict) -> SlotDef:
    return SlotDef(
        obj["name"],
        obj.get("type", "string"),
        obj.get("description", ""),
        tuple(literal_from_json(v) for v in obj.get("possible_values", ())),
    )


# -- terms -------------------------------------------------------------------


def _code_to_json(name):
    """Names in Code positions keep a String sort tag so the inert lint survives a file round trip."""
    return {"inert": str(name)} if isinstance(name, InertText) else name


def _code_from_json(obj):
    return inert(obj["inert"]) if isinstance(obj, dict) and "inert" in obj else obj


def term_to_json(term: Process) -> dict:
    if isinstance(term, Nil):
        return {"kind": "nil"}
    if isinstance(term, Intent):
        return {
            "kind": "intent",
            "name": term.name,
            "description": str(term.description),
            "required": [slot_to_json(s) for s in term.required],
            "optional": [slot_to_json(s) for s in term.optional],
            "transactional": term.transactional.value,
            "failure_modes": failure_modes_to_json(term.failure_modes),
            "dependencies": dependencies_to_json(term.dependencies),
        }
    if isinstance(term, CollectSlot):
        return {
            "kind": "collect",
            "slot": term.slot,
            "value": literal_to_json(term.value),
            "continuation": term_to_json(term.continuation),
        }
    if isinstance(term, ExecuteS):
        return {
            "kind": "execute",
            "intent": _code_to_json(term.intent_name),
            "bindings": params_to_json(term.bindings),
            "transactional": term.transactional,
        }
    if isinstance(term, Tool):
        out = {
            "kind": "tool",
            "name": term.name,
            "description": str(term.description),
            "schema": schema_to_json(term.schema),
        }
        if term.metadata is not None:
            out["metadata"] = metadata_to_json(term.metadata)
        return out
    if isinstance(term, Resource):
        return {"kind": "resource", "uri": term.uri, "content": literal_to_json(term.content)}
    if isinstance(term, Prompt):
        return {"kind": "prompt", "template": term.template, "args": params_to_json(term.args)}
    if isinstance(term, Initialize):
        return {"kind": "initialize", "caps": list(term.caps)}
    if isinstance(term, ToolsList):
        return {
            "kind": "tools_list",
            "tools": [term_to_json(t) for t in term.tools],
            "caps": list(term.caps),
            "progressive": term.progressive,
        }
    if isinstance(term, ToolDetail):
        return {"kind": "tool_detail", "tool": term_to_json(term.tool)}
    if isinstance(term, ToolCall):
        return {"kind": "tool_call", "name": _code_to_json(term.name), "params": params_to_json(term.params), "plus": term.plus}
    if isinstance(term, Validate):
        out = {
            "kind": "validate",
            "name": _code_to_json(term.name),
            "params": params_to_json(term.params),
            "schema": schema_to_json(term.schema),
        }
        if term.metadata is not None:
            out["metadata"] = metadata_to_json(term.metadata)
        return out
    if isinstance(term, Pending):
        return {
            "kind": "pending",
            "name": _code_to_json(term.name),
            "params": params_to_json(term.params),
            "approval": term.approval,
            "requires": list(term.requires),
        }
    if isinstance(term, Token):
        return {"kind": "token", "source": _code_to_json(term.source)}
    if isinstance(term, ResultT):
        return {"kind": "result", "output": literal_to_json(term.output)}
    if isinstance(term, ErrorT):
        return {"kind": "error", "error_type": term.error_type, "message": str(term.message)}
    if isinstance(term, Par):
        return {"kind": "par", "left": term_to_json(term.left), "right": term_to_json(term.right)}
    if isinstance(term, Restrict):
        return {"kind": "restrict", "channel": _code_to_json(term.channel), "body": term_to_json(term.body)}
    if isinstance(term, Repl):
        return {"kind": "repl", "body": term_to_json(term.body)}
    raise TypeError(f"not a process term: {term!r}")


def term_from_json(obj: dict) -> Process:
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "nil":
        return NIL
    if kind == "intent":
        return Intent(
            obj["name"],
            obj.get("description", ""),
            tuple(slot_from_json(s) for s in obj.get("required", ())),
            tuple(slot_from_json(s) for s in obj.get("optional", ())),
            TriBool(obj.get("transactional", "false")),
            failure_modes_from_json(obj.get("failure_modes", ())),
            dependencies_from_json(obj.get("dependencies", ())),
        )
    if kind == "collect":
        return CollectSlot(obj["slot"], literal_from_json(obj["value"]), term_from_json(obj["continuation"]))
    if kind == "execute":
        return ExecuteS(_code_from_json(obj["intent"]), params_from_json(obj.get("bindings")), bool(obj.get("transactional", False)))
    if kind == "tool":
        meta = obj.get("metadata")
        return Tool(
            obj["name"],
            obj.get("description", ""),
            schema_from_json(obj.get("schema", {})),
            None if meta is None else metadata_from_json(meta),
        )
    if kind == "resource":
        return Resource(obj["uri"], literal_from_json(obj.get("content", "")))
    if kind == "prompt":
        return Prompt(obj["template"], params_from_json(obj.get("args")))
    if kind == "initialize":
        return Initialize(tuple(obj.get("caps", ())))
    if kind == "tools_list":
        return ToolsList(
            tuple(term_from_json(t) for t in obj.get("tools", ())),
            tuple(obj.get("caps", ())),
            bool(obj.get("progressive", False)),
        )
    if kind == "tool_detail":
        return ToolDetail(term_from_json(obj["tool"]))
    if kind == "tool_call":
        return ToolCall(_code_from_json(obj["name"]), params_from_json(obj.get("params")), bool(obj.get("plus", False)))
    if kind == "validate":
        meta = obj.get("metadata")
        return Validate(
            _code_from_json(obj["name"]),
            params_from_json(obj.get("params")),
            schema_from_json(obj["schema"]),
            None if meta is None else metadata_from_json(meta),
        )
    if kind == "pending":
        return Pending(
            _code_from_json(obj["name"]), params_from_json(obj.get("params")), bool(obj.get("approval")), tuple(obj.get("requires", ()))
        )
    if kind == "token":
        return Token(_code_from_json(obj["source"]))
    if kind == "result":
        return ResultT(literal_from_json(obj["output"]))
    if kind == "error":
        return ErrorT(obj["error_type"], obj.get("message", ""))
    if kind == "par":
        return Par(term_from_json(obj["left"]), term_from_json(obj["right"]))
    if kind == "restrict":
        return Restrict(_code_from_json(obj["channel"]), term_from_json(obj["body"]))
    if kind == "repl":
        return Repl(term_from_json(obj["body"]))
    raise UnknownVariantError(f"unknown term kind {kind!r}")


def term_key(term: Process) -> str:
    """Canonical string of a term; distinguishes literals Python would equate (1, 1.0, True)."""
    return dumps(term_to_json(term))


# -- labels ------------------------------------------------------------------

_LABEL_FIELDS = {
    L.Invoke: ("invoke", ("name", "params")),
    L.Collect: ("collect", ("slot", "value")),
    L.Call: ("call", ("name", "params")),
    L.Tau: ("tau", ("reason",)),
    L.Approval: ("approval", ("tool", "confirm")),
    L.Requires: ("requires", ("token",)),
    L.Execute: ("execute", ("name",)),
    L.Result: ("result", ("output",)),
    L.Error: ("error", ("error_type", "message")),
    L.Read: ("read", ("uri",)),
    L.List: ("list", ("filter",)),
    L.Detail: ("detail", ("name",)),
}
_LABEL_BY_KIND = {kind: (cls, fields) for cls, (kind, fields) in _LABEL_FIELDS.items()}


def label_to_json(label) -> dict:
    kind, fields = _LABEL_FIELDS[type(label)]
    out = {"kind": kind}
    for f in fields:
        v = getattr(label, f)
        if f == "params":
            v = params_to_json(v)
        elif f in ("value", "output"):
            v = literal_to_json(v)
        elif isinstance(v, str):
            v = str(v)
        out[f] = v
    return out


def label_from_json(obj: dict):
    try:
        cls, fields = _LABEL_BY_KIND[obj["kind"]]
    except (KeyError, TypeError) as exc:
        raise UnknownVariantError(f"unknown label {obj!r}") from exc
    args = []
    for f in fields:
        v = obj[f]
        if f == "params":
            v = params_from_json(v)
        elif f in ("value", "output"):
            v = literal_from_json(v)
        args.append(v)
    return cls(*args)


def label_key(label) -> str:
    return dumps(label_to_json(label))
