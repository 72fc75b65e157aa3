"""Concrete syntax for process terms.

Grammar (whitespace and newlines are insignificant, ``//`` starts a comment)::

    process  := term ('|' term)*
    term     := '0' | 'nil' | '(' 'new' NAME ')' term | ('!' | 'bang') term
              | '(' process ')'
              | 'intent' NAME STRING ['tx' '=' ('true'|'false'|'?')] block
              | 'tool' NAME STRING block
              | 'resource' STRING LIT           | 'prompt' STRING args
              | 'init' names                    | 'detail' term
              | 'tools' ['progressive'] ['caps' names] '[' [term (',' term)*] ']'
              | 'call' NAME args ['plus']       | 'exec' NAME args ['tx']
              | 'collect' NAME '=' LIT '.' term
              | 'result' LIT                    | 'error' NAME STRING
              | 'validate' NAME args block
              | 'pending' NAME args ['approval'] ['requires' names]
              | 'token' NAME
    block    := '{' (decl [';'])* '}'
    decl     := ('slot' | 'optional') NAME ':' TYPE [STRING] ['in' '[' LIT,* ']']
              | 'fails' '[' ('(' NAME ',' recovery ')'),* ']'
              | 'deps' '[' ('(' NAME ',' RELATION ')'),* ']'
              | 'meta' '{' (metaitem [';'])* '}'
    metaitem := 'effects' NAME | 'approval' BOOL | 'summary' STRING | fails | deps
    recovery := 'retry' '(' INT ')' | 'fallback' '(' NAME ')' | 'prompt' '(' STRING ')' | 'abort'
    args     := '(' [NAME ':' LIT (',' NAME ':' LIT)*] ')'
    names    := '{' [NAME (',' NAME)*] '}'
    LIT      := STRING | NUMBER | 'true' | 'false' | '?'NAME

A NAME is an identifier or a double-quoted string.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import DuplicateSlotError, TermSyntaxError, UnknownVariantError
from .terms import (
    NIL,
    Abort,
    CollectSlot,
    Dependency,
    ErrorT,
    ExecuteS,
    Fallback,
    FailureMode,
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
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<var>\?[A-Za-z_\#][A-Za-z0-9_.\-\#]*)
  | (?P<ident>[A-Za-z_\#][A-Za-z0-9_.\-\#]*)
  | (?P<punct>[(){}\[\],:;|!=.?])
    """,
    re.VERBOSE,
)

_IDENT_RE = re.compile(r"[A-Za-z_#][A-Za-z0-9_.\-#]*\Z")

KEYWORDS = frozenset(
    """nil new bang intent tool resource prompt init detail tools call exec collect
    result error validate pending token tx plus progressive caps approval requires
    slot optional fails deps meta effects summary in true false retry fallback abort""".split()
)

TERM_KEYWORDS = frozenset(
    "nil bang intent tool resource prompt init detail tools call exec collect result error validate pending token".split()
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    toks, line, line_start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise TermSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        return TermSyntaxError(message, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "ident") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        tok = self.tok
        self.i += 1
        return tok

    def string(self) -> str:
        if self.tok.kind != "string":
            raise self.error(f"expected a string, found {self.tok.text or 'end of input'!r}")
        tok = self.tok
        self.i += 1
        return json.loads(tok.text)

    def name(self) -> str:
        tok = self.tok
        if tok.kind == "string":
            return self.string()
        if tok.kind == "ident":
            self.i += 1
            return tok.text
        raise self.error(f"expected a name, found {tok.text or 'end of input'!r}")

    def literal(self):
        tok = self.tok
        if tok.kind == "string":
            return self.string()
        self.i += 1
        if tok.kind == "number":
            return float(tok.text) if any(c in tok.text for c in ".eE") else int(tok.text)
        if tok.kind == "var":
            return Var(tok.text[1:])
        if tok.kind == "ident" and tok.text in ("true", "false"):
            return tok.text == "true"
        self.i -= 1
        raise self.error(f"expected a literal, found {tok.text or 'end of input'!r}")

    def boolean(self) -> bool:
        if self.accept("true"):
            return True
        if self.accept("false"):
            return False
        raise self.error("expected true or false")

    def sep_list(self, open_: str, close: str, item):
        self.expect(open_)
        out = []
        if not self.accept(close):
            while True:
                out.append(item())
                if self.accept(close):
                    break
                self.expect(",")
        return out

    def args(self) -> tuple:
        def pair():
            k = self.name()
            self.expect(":")
            return (k, self.literal())

        pairs = self.sep_list("(", ")", pair)
        keys = [k for k, _ in pairs]
        if len(set(keys)) != len(keys):
            raise self.error(f"duplicate argument names {keys}")
        return tuple(pairs)

    def names(self) -> tuple:
        return tuple(self.sep_list("{", "}", self.name))

    # -- grammar

    def process(self) -> Process:
        parts = [self.term()]
        while self.accept("|"):
            parts.append(self.term())
        result = parts[-1]
        for p in reversed(parts[:-1]):
            result = Par(p, result)
        return result

    def term(self) -> Process:
        tok = self.tok
        if tok.kind == "number" and tok.text == "0":
            self.i += 1
            return NIL
        if self.accept("!"):
            return Repl(self.term())
        if self.at("("):
            if self.toks[self.i + 1].text == "new" and self.toks[self.i + 1].kind == "ident":
                self.i += 2
                channel = self.name()
                self.expect(")")
                return Restrict(channel, self.term())
            self.i += 1
            inner = self.process()
            self.expect(")")
            return inner
        if tok.kind != "ident":
            raise self.error(f"expected a process term, found {tok.text or 'end of input'!r}")
        if tok.text not in TERM_KEYWORDS:
            raise UnknownVariantError(f"unknown term constructor {tok.text!r} at line {tok.line}, column {tok.col}")
        self.i += 1
        return getattr(self, "t_" + tok.text)()

    def t_nil(self):
        return NIL

    def t_bang(self):
        return Repl(self.term())

    def t_intent(self):
        name = self.name()
        description = self.string()
        tx = TriBool.FALSE
        if self.accept("tx"):
            self.expect("=")
            if self.accept("?"):
                tx = TriBool.UNKNOWN
            else:
                tx = TriBool.of(self.boolean())
        block = self.block(allow_meta=False)
        return Intent(
            name,
            description,
            tuple(block["required"]),
            tuple(block["optional"]),
            tx,
            block["fails"] or (),
            block["deps"] or (),
        )

    def t_tool(self):
        name = self.name()
        description = self.string()
        block = self.block(allow_meta=True)
        return Tool(name, description, _schema_from_block(block), block["meta"])

    def t_validate(self):
        name = self.name()
        params = self.args()
        block = self.block(allow_meta=True)
        return Validate(name, params, _schema_from_block(block), block["meta"])

    def t_resource(self):
        return Resource(self.string(), self.literal())

    def t_prompt(self):
        return Prompt(self.string(), self.args())

    def t_init(self):
        return Initialize(self.names())

    def t_detail(self):
        inner = self.term()
        if not isinstance(inner, Tool):
            raise self.error("detail expects a tool term")
        return ToolDetail(inner)

    def t_tools(self):
        progressive = self.accept("progressive")
        caps = self.names() if self.accept("caps") else ()
        items = self.sep_list("[", "]", self.term)
        for t in items:
            if not isinstance(t, Tool):
                raise self.error("tools [...] holds tool terms only")
        return ToolsList(tuple(items), caps, progressive)

    def t_call(self):
        name = self.name()
        params = self.args()
        return ToolCall(name, params, self.accept("plus"))

    def t_exec(self):
        name = self.name()
        params = self.args()
        return ExecuteS(name, params, self.accept("tx"))

    def t_collect(self):
        slot = self.name()
        self.expect("=")
        value = self.literal()
        self.expect(".")
        return CollectSlot(slot, value, self.term())

    def t_result(self):
        return ResultT(self.literal())

    def t_error(self):
        return ErrorT(self.name(), self.string())

    def t_pending(self):
        name = self.name()
        params = self.args()
        approval = self.accept("approval")
        requires = self.names() if self.accept("requires") else ()
        return Pending(name, params, approval, requires)

    def t_token(self):
        return Token(self.name())

    # -- declaration blocks

    def block(self, allow_meta: bool) -> dict:
        out = {"required": [], "optional": [], "fails": None, "deps": None, "meta": None}
        seen = set()
        self.expect("{")
        while not self.accept("}"):
            tok = self.tok
            if self.accept("slot") or self.accept("optional"):
                slot = self.slot_decl()
                if slot.name in seen:
                    raise DuplicateSlotError(f"duplicate slot {slot.name!r} at line {tok.line}, column {tok.col}")
                seen.add(slot.name)
                out["required" if tok.text == "slot" else "optional"].append(slot)
            elif not allow_meta and self.accept("fails"):
                out["fails"] = self.fails()
            elif not allow_meta and self.accept("deps"):
                out["deps"] = self.deps()
            elif allow_meta and self.accept("meta"):
                if out["meta"] is not None:
                    raise self.error("duplicate meta block", tok)
                out["meta"] = self.meta()
            else:
                raise self.error(f"unexpected {tok.text or 'end of input'!r} in declaration block")
            self.accept(";")
        return out

    def slot_decl(self) -> SlotDef:
        name = self.name()
        self.expect(":")
        type_tok = self.tok
        type_name = self.name()
        description = self.string() if self.tok.kind == "string" else ""
        values = tuple(self.sep_list("[", "]", self.literal)) if self.accept("in") else ()
        try:
            return SlotDef(name, type_name, description, values)
        except ValueError as exc:
            raise self.error(str(exc), type_tok) from exc

    def fails(self) -> tuple:
        def item():
            self.expect("(")
            err = self.name()
            self.expect(",")
            rec = self.recovery()
            self.expect(")")
            return FailureMode(err, rec)

        return tuple(self.sep_list("[", "]", item))

    def recovery(self):
        tok = self.tok
        if self.accept("retry"):
            self.expect("(")
            n_tok = self.tok
            n = self.literal()
            self.expect(")")
            try:
                return Retry(n)
            except ValueError as exc:
                raise self.error(str(exc), n_tok) from exc
        if self.accept("fallback"):
            self.expect("(")
            target = self.name()
            self.expect(")")
            return Fallback(target)
        if self.accept("prompt"):
            self.expect("(")
            msg = self.string()
            self.expect(")")
            return UserPrompt(msg)
        if self.accept("abort"):
            return Abort()
        raise self.error(f"expected a recovery strategy, found {tok.text!r}")

    def deps(self) -> tuple:
        def item():
            self.expect("(")
            target = self.name()
            self.expect(",")
            rel_tok = self.tok
            rel = self.name()
            self.expect(")")
            try:
                return Dependency(target, rel)
            except ValueError as exc:
                raise self.error(str(exc), rel_tok) from exc

        return tuple(self.sep_list("[", "]", item))

    def meta(self) -> ToolMetadata:
        fields: dict = {}
        self.expect("{")
        while not self.accept("}"):
            tok = self.tok
            if self.accept("effects"):
                key, value = "side_effects", self.name()
            elif self.accept("approval"):
                key, value = "requires_approval", self.boolean()
            elif self.accept("summary"):
                key, value = "summary", self.string()
            elif self.accept("fails"):
                key, value = "failure_modes", self.fails()
            elif self.accept("deps"):
                key, value = "dependencies", self.deps()
            else:
                raise self.error(f"unexpected {tok.text or 'end of input'!r} in meta block")
            if key in fields:
                raise self.error(f"duplicate meta field {tok.text!r}", tok)
            fields[key] = value
            self.accept(";")
        try:
            return ToolMetadata(**fields)
        except ValueError as exc:
            raise self.error(str(exc)) from exc


def _schema_from_block(block: dict) -> JsonSchema:
    props = {}
    for slot in block["required"] + block["optional"]:
        props[slot.name] = PropertySpec(slot.type_name, slot.description, slot.possible_values or None)
    return JsonSchema(tuple(s.name for s in block["required"]), props)


def parse_term(text: str) -> Process:
    """Parse term source text into a process term."""
    p = _Parser(text)
    term = p.process()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected trailing input {p.tok.text!r}")
    return term


# ---------------------------------------------------------------------------
# printing


def _name(n: str) -> str:
    if _IDENT_RE.match(n) and n not in KEYWORDS:
        return n
    return json.dumps(str(n), ensure_ascii=False)


def _str(s: str) -> str:
    return json.dumps(str(s), ensure_ascii=False)


def format_literal(v) -> str:
    if isinstance(v, Var):
        return f"?{v.name}"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return _str(v)
    return json.dumps(v)


def _args(params) -> str:
    return "(" + ", ".join(f"{_name(k)}: {format_literal(v)}" for k, v in params) + ")"


def _names(names) -> str:
    return "{" + ", ".join(_name(n) for n in names) + "}"


def _slot(kw: str, s: SlotDef) -> str:
    out = f"{kw} {_name(s.name)}: {s.type_name}"
    if s.description:
        out += f" {_str(s.description)}"
    if s.possible_values:
        out += " in [" + ", ".join(format_literal(v) for v in s.possible_values) + "]"
    return out


def _recovery(r) -> str:
    if isinstance(r, Retry):
        return f"retry({r.n})"
    if isinstance(r, Fallback):
        return f"fallback({_name(r.tool)})"
    if isinstance(r, UserPrompt):
        return f"prompt({_str(r.message)})"
    return "abort"


def _fails(modes) -> str:
    return "fails [" + ", ".join(f"({_name(m.error_type)}, {_recovery(m.recovery)})" for m in modes) + "]"


def _deps(deps) -> str:
    return "deps [" + ", ".join(f"({_name(d.tool)}, {d.relation})" for d in deps) + "]"


def _meta(m: ToolMetadata) -> str:
    items = []
    if m.side_effects is not None:
        items.append(f"effects {m.side_effects}")
    if m.requires_approval is not None:
        items.append(f"approval {'true' if m.requires_approval else 'false'}")
    if m.summary is not None:
        items.append(f"summary {_str(m.summary)}")
    if m.failure_modes is not None:
        items.append(_fails(m.failure_modes))
    if m.dependencies is not None:
        items.append(_deps(m.dependencies))
    return "meta { " + "; ".join(items) + (" }" if items else "}")


def _schema_block(schema: JsonSchema, meta: ToolMetadata | None) -> str:
    props = dict(schema.properties)
    decls = []
    for kw, names in (("slot", schema.required), ("optional", [n for n in props if n not in schema.required])):
        for n in names:
            p = props[n]
            decls.append(_slot(kw, SlotDef(n, p.type_name, p.description, p.enum or ())))
    if meta is not None:
        decls.append(_meta(meta))
    return "{ " + "; ".join(decls) + " }" if decls else "{ }"


def _prefix_body(t: Process) -> str:
    s = format_term(t)
    return f"({s})" if isinstance(t, Par) else s


def format_term(term: Process) -> str:
    """Print a term in concrete syntax; ``parse_term`` inverts it."""
    if isinstance(term, Nil):
        return "0"
    if isinstance(term, Par):
        left = format_term(term.left)
        if isinstance(term.left, Par):
            left = f"({left})"
        return f"{left} | {format_term(term.right)}"
    if isinstance(term, Restrict):
        return f"(new {_name(term.channel)}) {_prefix_body(term.body)}"
    if isinstance(term, Repl):
        return f"!{_prefix_body(term.body)}"
    if isinstance(term, Intent):
        decls = [_slot("slot", s) for s in term.required] + [_slot("optional", s) for s in term.optional]
        if term.failure_modes:
            decls.append(_fails(term.failure_modes))
        if term.dependencies:
            decls.append(_deps(term.dependencies))
        block = "{ " + "; ".join(decls) + " }" if decls else "{ }"
        return f"intent {_name(term.name)} {_str(term.description)} tx={term.transactional.value} {block}"
    if isinstance(term, Tool):
        return f"tool {_name(term.name)} {_str(term.description)} {_schema_block(term.schema, term.metadata)}"
    if isinstance(term, Validate):
        return f"validate {_name(term.name)} {_args(term.params)} {_schema_block(term.schema, term.metadata)}"
    if isinstance(term, CollectSlot):
        return f"collect {_name(term.slot)} = {format_literal(term.value)} . {_prefix_body(term.continuation)}"
    if isinstance(term, ExecuteS):
        return f"exec {_name(term.intent_name)} {_args(term.bindings)}" + (" tx" if term.transactional else "")
    if isinstance(term, ToolCall):
        return f"call {_name(term.name)} {_args(term.params)}" + (" plus" if term.plus else "")
    if isinstance(term, Resource):
        return f"resource {_str(term.uri)} {format_literal(term.content)}"
    if isinstance(term, Prompt):
        return f"prompt {_str(term.template)} {_args(term.args)}"
    if isinstance(term, Initialize):
        return f"init {_names(term.caps)}"
    if isinstance(term, ToolsList):
        head = "tools" + (" progressive" if term.progressive else "")
        if term.caps:
            head += f" caps {_names(term.caps)}"
        return head + " [" + ", ".join(format_term(t) for t in term.tools) + "]"
    if isinstance(term, ToolDetail):
        return f"detail {format_term(term.tool)}"
    if isinstance(term, Pending):
        out = f"pending {_name(term.name)} {_args(term.params)}"
        if term.approval:
            out += " approval"
        if term.requires:
            out += f" requires {_names(term.requires)}"
        return out
    if isinstance(term, Token):
        return f"token {_name(term.source)}"
    if isinstance(term, ResultT):
        return f"result {format_literal(term.output)}"
    if isinstance(term, ErrorT):
        return f"error {_name(term.error_type)} {_str(term.message)}"
    raise TypeError(f"not a process term: {term!r}")
