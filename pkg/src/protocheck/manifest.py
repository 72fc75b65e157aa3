"""MCP tool manifests and SGD service schemas, in and out.

Only the object-schema subset the calculi model is accepted. Annotation keys
(``title``, ``default``, ``examples``, ``format``, ``$comment``...) and any
``x-`` extension key are kept verbatim in ``extras`` and written back on emit.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

from .codec import (
    literal_from_json,
    literal_to_json,
    metadata_from_json,
    metadata_to_json,
    params_from_json,
    params_to_json,
    failure_modes_from_json,
    failure_modes_to_json,
    dependencies_from_json,
    dependencies_to_json,
    schema_to_json,
)
from .errors import (
    DuplicateToolName,
    MalformedManifest,
    MalformedSchema,
    UnresolvedSlotReference,
    UnsupportedSchemaFeature,
)
from .terms import (
    SLOT_TYPES,
    Intent,
    JsonSchema,
    Prompt,
    PropertySpec,
    Resource,
    SlotDef,
    Tool,
    TriBool,
    par,
)

ANNOTATION_KEYS = frozenset({"title", "default", "examples", "format", "$comment", "$id", "$schema", "deprecated", "readOnly", "writeOnly"})
PLUS_KEY = "x-mcp-plus"


def _is_extra(key: str) -> bool:
    return key in ANNOTATION_KEYS or key.startswith("x-")


def _load(document):
    if isinstance(document, (str, bytes)):
        try:
            return json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedManifest(f"not valid JSON: {exc}") from exc
    return document


def dump_json(obj) -> str:
    """Reproducible JSON text: sorted keys, 2-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# MCP


@dataclass
class McpRegistry:
    tools: tuple = ()
    resources: tuple = ()
    prompts: tuple = ()
    server_caps: tuple = ()
    extras: dict = field(default_factory=dict)  # path -> verbatim JSON object

    def __post_init__(self):
        self.tools = tuple(self.tools)
        self.resources = tuple(self.resources)
        self.prompts = tuple(self.prompts)
        self.server_caps = tuple(sorted(set(self.server_caps)))
        names = [t.name for t in self.tools]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise DuplicateToolName(f"duplicate tool names {dupes}")

    def tool(self, name: str) -> Tool:
        for t in self.tools:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def tool_names(self) -> tuple:
        return tuple(t.name for t in self.tools)

    def as_process(self):
        """All primitives of the server in parallel."""
        return par(*self.tools, *self.resources, *self.prompts)


def _schema_from_manifest(obj, where: str, extras: dict) -> JsonSchema:
    if not isinstance(obj, dict):
        raise MalformedManifest(f"{where}: inputSchema must be an object")
    own = {}
    for key, value in obj.items():
        if key in ("type", "required", "properties"):
            continue
        if key == "additionalProperties" and value is True or _is_extra(key) or key == "description":
            own[key] = value
        else:
            raise UnsupportedSchemaFeature(f"{where}: schema keyword {key!r} is outside the supported subset")
    if obj.get("type", "object") != "object":
        raise UnsupportedSchemaFeature(f"{where}: top-level schema type must be object")
    required = obj.get("required", [])
    props_in = obj.get("properties", {})
    if not isinstance(required, list) or not isinstance(props_in, dict):
        raise MalformedManifest(f"{where}: required must be a list and properties an object")
    if own:
        extras[where + "/inputSchema"] = own
    props = {}
    for name, spec in props_in.items():
        if not isinstance(spec, dict) or "type" not in spec:
            raise MalformedManifest(f"{where}: property {name!r} needs a type")
        kept = {}
        for key, value in spec.items():
            if key in ("type", "description", "enum"):
                continue
            if _is_extra(key):
                kept[key] = value
            else:
                raise UnsupportedSchemaFeature(f"{where}: property {name!r} uses unsupported keyword {key!r}")
        if spec["type"] not in SLOT_TYPES:
            raise UnsupportedSchemaFeature(f"{where}: property {name!r} has unsupported type {spec['type']!r}")
        if kept:
            extras[f"{where}/properties/{name}"] = kept
        enum = spec.get("enum")
        if enum is not None and not isinstance(enum, list):
            raise MalformedManifest(f"{where}: enum of {name!r} must be a list")
        props[name] = PropertySpec(
            spec["type"],
            spec.get("description", ""),
            None if enum is None else tuple(literal_from_json(v) for v in enum),
        )
    try:
        return JsonSchema(tuple(required), props)
    except ValueError as exc:
        raise MalformedManifest(f"{where}: {exc}") from exc


def parse_mcp_manifest(document) -> McpRegistry:
    """Read a ``tools/list``-shaped manifest (JSON text or already-decoded object)."""
    doc = _load(document)
    if not isinstance(doc, dict) or not isinstance(doc.get("tools"), list):
        raise MalformedManifest("manifest must be an object with a 'tools' array")
    extras: dict = {}
    top = {k: v for k, v in doc.items() if k not in ("tools", "resources", "prompts", "capabilities")}
    if top:
        extras["/"] = top
    tools = []
    for i, entry in enumerate(doc["tools"]):
        if not isinstance(entry, dict):
            raise MalformedManifest(f"tools[{i}] is not an object")
        missing = [k for k in ("name", "description", "inputSchema") if k not in entry]
        if missing:
            raise MalformedManifest(f"tools[{i}] lacks {missing}")
        where = f"tools/{entry['name']}"
        rest = {k: v for k, v in entry.items() if k not in ("name", "description", "inputSchema", PLUS_KEY)}
        if rest:
            extras[where] = rest
        schema = _schema_from_manifest(entry["inputSchema"], where, extras)
        meta = metadata_from_json(entry[PLUS_KEY]) if PLUS_KEY in entry else None
        tools.append(Tool(entry["name"], entry["description"], schema, meta))
    resources = []
    for i, entry in enumerate(doc.get("resources", [])):
        if not isinstance(entry, dict) or "uri" not in entry:
            raise MalformedManifest(f"resources[{i}] needs a uri")
        rest = {k: v for k, v in entry.items() if k not in ("uri", "content")}
        if rest:
            extras[f"resources/{entry['uri']}"] = rest
        resources.append(Resource(entry["uri"], literal_from_json(entry.get("content", ""))))
    prompts = []
    for i, entry in enumerate(doc.get("prompts", [])):
        if not isinstance(entry, dict) or "template" not in entry:
            raise MalformedManifest(f"prompts[{i}] needs a template")
        rest = {k: v for k, v in entry.items() if k not in ("template", "args")}
        if rest:
            extras[f"prompts/{entry['template']}"] = rest
        prompts.append(Prompt(entry["template"], params_from_json(entry.get("args", {}))))
    return McpRegistry(tuple(tools), tuple(resources), tuple(prompts), tuple(doc.get("capabilities", ())), extras)


def tool_to_json(tool: Tool, extras: dict | None = None) -> dict:
    extras = extras or {}
    where = f"tools/{tool.name}"
    schema = schema_to_json(tool.schema)
    schema.update(extras.get(where + "/inputSchema", {}))
    for name in schema["properties"]:
        schema["properties"][name].update(extras.get(f"{where}/properties/{name}", {}))
    out = {"name": tool.name, "description": str(tool.description), "inputSchema": schema}
    if tool.metadata is not None:
        out[PLUS_KEY] = metadata_to_json(tool.metadata)
    out.update(extras.get(where, {}))
    return out


def manifest_to_json(registry: McpRegistry) -> dict:
    ex = registry.extras
    out = dict(ex.get("/", {}))
    out["tools"] = [tool_to_json(t, ex) for t in registry.tools]
    if registry.resources:
        out["resources"] = [
            {"uri": r.uri, "content": literal_to_json(r.content), **ex.get(f"resources/{r.uri}", {})}
            for r in registry.resources
        ]
    if registry.prompts:
        out["prompts"] = [
            {"template": p.template, "args": params_to_json(p.args), **ex.get(f"prompts/{p.template}", {})}
            for p in registry.prompts
        ]
    if registry.server_caps:
        out["capabilities"] = list(registry.server_caps)
    return out


def emit_manifest(registry: McpRegistry) -> str:
    return dump_json(manifest_to_json(registry))


# ---------------------------------------------------------------------------
# SGD


@dataclass
class SgdRegistry:
    intents: tuple = ()
    service_name: str = ""
    description: str = ""
    extras: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.intents = tuple(self.intents)
        names = [i.name for i in self.intents]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise MalformedSchema(f"duplicate intent names {dupes}")

    def intent(self, name: str) -> Intent:
        for i in self.intents:
            if i.name == name:
                return i
        raise KeyError(name)

    def as_process(self):
        return par(*self.intents)


_SLOT_KEYS = ("name", "description", "type", "possible_values", "is_categorical")
_INTENT_KEYS = ("name", "description", "is_transactional", "required_slots", "optional_slots", "failure_modes", "dependencies")


def parse_sgd_schema(document) -> SgdRegistry:
    """Read an SGD-style service schema (service_name, slots, intents)."""
    try:
        doc = _load(document)
    except MalformedManifest as exc:
        raise MalformedSchema(str(exc)) from exc
    if not isinstance(doc, dict) or not all(k in doc for k in ("service_name", "slots", "intents")):
        raise MalformedSchema("schema needs service_name, slots and intents")
    extras: dict = {}
    top = {k: v for k, v in doc.items() if k not in ("service_name", "description", "slots", "intents")}
    if top:
        extras["/"] = top
    slots = {}
    for i, s in enumerate(doc["slots"]):
        if not isinstance(s, dict) or "name" not in s:
            raise MalformedSchema(f"slots[{i}] needs a name")
        rest = {k: v for k, v in s.items() if k not in _SLOT_KEYS}
        if rest:
            extras[f"slots/{s['name']}"] = rest
        try:
            slots[s["name"]] = SlotDef(
                s["name"],
                s.get("type", "string"),
                s.get("description", ""),
                tuple(literal_from_json(v) for v in s.get("possible_values", [])),
            )
        except ValueError as exc:
            raise MalformedSchema(str(exc)) from exc
    intents, notes = [], []
    for i, rec in enumerate(doc["intents"]):
        if not isinstance(rec, dict) or "name" not in rec:
            raise MalformedSchema(f"intents[{i}] needs a name")
        name = rec["name"]
        rest = {k: v for k, v in rec.items() if k not in _INTENT_KEYS}
        if rest:
            extras[f"intents/{name}"] = rest

        def resolve(names):
            out = []
            for n in names:
                if n not in slots:
                    raise UnresolvedSlotReference(f"intent {name!r} references unknown slot {n!r}")
                out.append(slots[n])
            return tuple(out)

        optional = rec.get("optional_slots", [])
        if isinstance(optional, dict):
            optional = list(optional)
        if "is_transactional" in rec:
            tx = TriBool.of(bool(rec["is_transactional"]))
        else:
            tx = TriBool.UNKNOWN
            msg = f"intent {name!r} has no is_transactional; treated as unknown"
            notes.append(msg)
            warnings.warn(msg, stacklevel=2)
        intents.append(
            Intent(
                name,
                rec.get("description", ""),
                resolve(rec.get("required_slots", [])),
                resolve(optional),
                tx,
                failure_modes_from_json(rec.get("failure_modes", [])),
                dependencies_from_json(rec.get("dependencies", [])),
            )
        )
    return SgdRegistry(tuple(intents), doc["service_name"], doc.get("description", ""), extras, notes)


def sgd_to_json(registry: SgdRegistry) -> dict:
    ex = registry.extras
    slots: dict = {}
    intents = []
    for intent in registry.intents:
        for s in intent.slots:
            if s.name in slots and slots[s.name] != s:
                raise MalformedSchema(f"slot {s.name!r} is defined inconsistently across intents")
            slots[s.name] = s
        rec = {
            "name": intent.name,
            "description": str(intent.description),
            "required_slots": [s.name for s in intent.required],
            "optional_slots": [s.name for s in intent.optional],
        }
        if intent.transactional is not TriBool.UNKNOWN:
            rec["is_transactional"] = intent.transactional.as_bool()
        if intent.failure_modes:
            rec["failure_modes"] = failure_modes_to_json(intent.failure_modes)
        if intent.dependencies:
            rec["dependencies"] = dependencies_to_json(intent.dependencies)
        rec.update(ex.get(f"intents/{intent.name}", {}))
        intents.append(rec)
    slot_list = []
    for name in sorted(slots):
        s = slots[name]
        rec = {
            "name": s.name,
            "type": s.type_name,
            "description": str(s.description),
            "is_categorical": bool(s.possible_values),
            "possible_values": [literal_to_json(v) for v in s.possible_values],
        }
        rec.update(ex.get(f"slots/{name}", {}))
        slot_list.append(rec)
    out = dict(ex.get("/", {}))
    out.update({"service_name": registry.service_name, "slots": slot_list, "intents": intents})
    if registry.description:
        out["description"] = registry.description
    return out


def emit_sgd_schema(registry: SgdRegistry) -> str:
    return dump_json(sgd_to_json(registry))
