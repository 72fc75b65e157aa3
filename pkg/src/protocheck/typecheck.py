"""Type rules for the five MCP+ principles and the progressive-disclosure token budget.

Tokenization and entity counting are deliberately small heuristics:

* ``tokens`` lowercases, splits on whitespace and on ``.``/``,``/``;`` not
  followed by a digit, strips edge punctuation and drops empties;
* ``entities`` counts whitespace chunks that are list items after ``e.g.``,
  ``i.e.``, ``such as`` or ``for example``; members of comma-separated runs of
  upper-case codes; numeric comparisons (``>100``); quoted literals; and
  ``key:value`` pairs. Each chunk counts once.
"""

from __future__ import annotations

import graphlib
import math
import re
import string
from dataclasses import dataclass, field

from .errors import MissingSummary
from .report import VerificationReport
from .terms import Fallback, Tool

NECESSITY = {
    "P1": "slot meaning cannot be recovered from descriptions",
    "P2": "transactionality cannot be recovered",
    "P3": "recovery behaviour on error paths cannot be represented",
    "P4": "equivalence holds but discovery cost is unbounded",
    "P5": "tool sequencing constraints are lost",
}

_PUNCT = string.punctuation + "“”‘’«»…"
_SPLIT_RE = re.compile(r"\s+|[.,;](?!\d)")


@dataclass(frozen=True)
class TypecheckConfig:
    tau: float = 0.3
    summary_ratio: float = 0.1
    k: float = 0.1

    def __post_init__(self):
        for name in ("tau", "summary_ratio", "k"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")


def tokens(s: str) -> list:
    out = []
    for piece in _SPLIT_RE.split(str(s).lower()):
        piece = piece.strip(_PUNCT)
        if piece:
            out.append(piece)
    return out


# ---------------------------------------------------------------------------
# entities

_CODE_RE = re.compile(r"[A-Z]{2,5}")
_CMP_RE = re.compile(r"(?:[<>]=?|[≤≥])\s*-?\d")
_KV_RE = re.compile(r"[A-Za-z_][\w.\-]*:(?!//)[^\s:]+")
_QUOTE_RE = re.compile(r"\"[^\"]+\"|“[^”]+”|`[^`]+`|(?<!\w)'[^']+'(?!\w)")
_MARKERS = {"e.g", "eg", "i.e", "ie"}
_TWO_WORD_MARKERS = {("such", "as"), ("for", "example"), ("for", "instance")}


def _bare(chunk: str) -> str:
    return chunk.strip(_PUNCT)


def entity_chunks(s: str) -> set:
    """Indices of whitespace chunks of ``s`` that count as entities."""
    s = str(s)
    spans = [(m.start(), m.end(), m.group()) for m in re.finditer(r"\S+", s)]
    chunks = [c for _, _, c in spans]
    flagged = set()

    # items of example lists
    i = 0
    while i < len(chunks):
        low = chunks[i].lower().strip(_PUNCT)
        start = None
        if low.rstrip(".") in _MARKERS:
            start = i + 1
        elif i + 1 < len(chunks) and (low, chunks[i + 1].lower().strip(_PUNCT)) in _TWO_WORD_MARKERS:
            start = i + 2
        if start is not None:
            j = start
            while j < len(chunks):
                if _bare(chunks[j]):
                    flagged.add(j)
                if not chunks[j].endswith(","):
                    break
                j += 1
            i = j
        i += 1

    # runs of comma-separated upper-case codes
    run = []
    for idx, c in enumerate(chunks + [""]):
        if _CODE_RE.fullmatch(_bare(c)) and (not run or chunks[run[-1]].endswith(",")):
            run.append(idx)
            continue
        if len(run) >= 2:
            flagged.update(run)
        run = [idx] if idx < len(chunks) and _CODE_RE.fullmatch(_bare(c)) else []

    for idx, c in enumerate(chunks):
        if _CMP_RE.search(c) or _KV_RE.search(_bare(c)):
            flagged.add(idx)

    for m in _QUOTE_RE.finditer(s):
        for idx, (a, b, _) in enumerate(spans):
            if a < m.end() and b > m.start():
                flagged.add(idx)
    # a chunk with no tokens (bare punctuation) carries no entity
    return {i for i in flagged if tokens(chunks[i])}


def entities(s: str) -> int:
    return len(entity_chunks(s))


def semantic_density(s: str) -> float:
    n = len(tokens(s))
    if n == 0:
        return 0.0
    return entities(s) / n


# ---------------------------------------------------------------------------
# rules


@dataclass
class RuleVerdict:
    rule: str
    passed: bool
    details: dict = field(default_factory=dict)
    message: str = ""

    def to_json(self) -> dict:
        out = {"pass": self.passed, **self.details}
        if self.message:
            out["message"] = self.message
        if not self.passed:
            out["necessity"] = NECESSITY[self.rule]
        return out


def check_p1(tool: Tool, config: TypecheckConfig = TypecheckConfig()) -> RuleVerdict:
    fields = [("description", tool.description)]
    fields += [(f"properties.{n}.description", p.description) for n, p in tool.schema.properties]
    rows = []
    for name, text in fields:
        d = semantic_density(text)
        rows.append({"field": name, "density": d, "pass": d >= config.tau})
    failing = [r for r in rows if not r["pass"]]
    density = rows[0]["density"]
    msg = "" if not failing else "below density threshold: " + ", ".join(r["field"] for r in failing)
    return RuleVerdict("P1", not failing, {"density": density, "tau": config.tau, "fields": rows}, msg)


def check_p2(tool: Tool) -> RuleVerdict:
    meta = tool.metadata
    if meta is None:
        return RuleVerdict("P2", False, {}, "no metadata: plain MCP tool, not MCP+")
    if meta.side_effects is None or meta.requires_approval is None:
        absent = [f for f in ("side_effects", "requires_approval") if getattr(meta, f) is None]
        return RuleVerdict("P2", False, {"absent": absent}, f"missing {', '.join(absent)}")
    ok = meta.side_effects not in ("write", "delete") or meta.requires_approval
    details = {"side_effects": meta.side_effects, "requires_approval": meta.requires_approval}
    msg = "" if ok else f"side_effects={meta.side_effects} requires approval"
    return RuleVerdict("P2", bool(ok), details, msg)


def check_p3(tool: Tool, registry=None) -> RuleVerdict:
    meta = tool.metadata
    modes = meta.failure_modes if meta is not None else None
    if not modes:
        return RuleVerdict("P3", False, {}, "no failure modes declared" if modes is not None else "failure_modes absent")
    kinds = [m.error_type for m in modes]
    dupes = sorted({k for k in kinds if kinds.count(k) > 1})
    unresolved = []
    if registry is not None:  # fallback targets can only be resolved against a registry
        names = set(registry.tool_names)
        unresolved = sorted(
            m.recovery.tool for m in modes if isinstance(m.recovery, Fallback) and m.recovery.tool not in names
        )
    problems = []
    if dupes:
        problems.append(f"duplicate error types {dupes}")
    if unresolved:
        problems.append(f"fallback targets not in registry {unresolved}")
    details = {"error_types": kinds, "duplicates": dupes, "unresolved_fallbacks": unresolved}
    return RuleVerdict("P3", not problems, details, "; ".join(problems))


def check_p4(tool: Tool, config: TypecheckConfig = TypecheckConfig()) -> RuleVerdict:
    meta = tool.metadata
    summary = meta.summary if meta is not None else None
    nd = len(tokens(tool.description))
    bound = config.summary_ratio * nd
    if summary is None:
        return RuleVerdict("P4", False, {"description_tokens": nd, "bound": bound}, "summary absent")
    ns = len(tokens(summary))
    ok = 0 < ns < bound
    arithmetic = f"{ns} < {config.summary_ratio:g} * {nd} = {bound:.6g} is {str(ns < bound).lower()}"
    details = {"summary_tokens": ns, "description_tokens": nd, "bound": bound, "arithmetic": arithmetic}
    msg = "" if ok else ("empty summary" if ns == 0 else "summary too long")
    return RuleVerdict("P4", ok, details, msg)


def check_p5(registry) -> RuleVerdict:
    names = set(registry.tool_names)
    absent, unresolved, requires, exclusive = [], [], {}, set()
    for t in registry.tools:
        deps = t.metadata.dependencies if t.metadata is not None else None
        if deps is None:
            absent.append(t.name)
            continue
        requires.setdefault(t.name, set())
        for d in deps:
            if d.tool not in names:
                unresolved.append([t.name, d.tool])
            elif d.relation == "Requires":
                requires[t.name].add(d.tool)
            elif d.relation == "ExclusiveWith":
                exclusive.add((t.name, d.tool))
    cycle = None
    try:
        order = list(graphlib.TopologicalSorter(requires).static_order())
    except graphlib.CycleError as exc:
        cycle, order = list(exc.args[1]), None
    conflicts = sorted(
        [a, b] for a, targets in requires.items() for b in targets if (a, b) in exclusive or (b, a) in exclusive
    )
    problems = []
    if absent:
        problems.append(f"dependencies absent on {sorted(absent)}")
    if unresolved:
        problems.append(f"unresolved targets {unresolved}")
    if cycle:
        problems.append(f"Requires cycle {' -> '.join(cycle)}")
    if conflicts:
        problems.append(f"Requires and ExclusiveWith on {conflicts}")
    details = {
        "absent": sorted(absent),
        "unresolved": unresolved,
        "cycle": cycle,
        "conflicts": conflicts,
        "order": order,
    }
    return RuleVerdict("P5", not problems, details, "; ".join(problems))


def check_tool(tool: Tool, registry=None, config: TypecheckConfig = TypecheckConfig()) -> dict:
    return {
        "P1": check_p1(tool, config),
        "P2": check_p2(tool),
        "P3": check_p3(tool, registry),
        "P4": check_p4(tool, config),
    }


# ---------------------------------------------------------------------------
# token budget


@dataclass
class TokenReport:
    baseline: int
    progressive: int
    ratio: float
    flag: bool
    selected: list
    preconditions: dict
    warnings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "baseline": self.baseline,
            "progressive": self.progressive,
            "ratio": round(self.ratio, 6),
            "flag": self.flag,
            "selected": self.selected,
            "preconditions": self.preconditions,
            "warnings": self.warnings,
        }


def token_report(registry, config: TypecheckConfig = TypecheckConfig()) -> TokenReport:
    """Worst-case progressive-disclosure cost: all summaries plus the largest ceil(k*N) descriptions."""
    tools = list(registry.tools)
    for t in tools:
        if t.metadata is None or t.metadata.summary is None:
            raise MissingSummary(t.name)
    d_len = {t.name: len(tokens(t.description)) for t in tools}
    s_len = {t.name: len(tokens(t.metadata.summary)) for t in tools}
    baseline = sum(d_len.values())
    m = math.ceil(config.k * len(tools) - 1e-9) if tools else 0
    largest = sorted(tools, key=lambda t: (-d_len[t.name], t.name))[:m]
    progressive = sum(s_len.values()) + sum(d_len[t.name] for t in largest)
    warnings = []
    if baseline == 0:
        warnings.append("degenerate input: every description is empty, ratio reported as 0")
        ratio = 0.0
        flag = False
    else:
        ratio = progressive / baseline
        flag = ratio < 0.2
    preconditions = {
        "k_below_0.1": config.k < 0.1,
        "summaries_within_p4_bound": all(s_len[n] < config.summary_ratio * d_len[n] for n in d_len),
    }
    return TokenReport(baseline, progressive, ratio, flag, [t.name for t in largest], preconditions, warnings)


# ---------------------------------------------------------------------------
# registry


def typecheck_registry(registry, config: TypecheckConfig = TypecheckConfig()) -> VerificationReport:
    """Per-tool P1-P4 and registry-level P5; pass iff every rule passes."""
    rows, findings, warnings = [], [], []
    ok = True
    for t in registry.tools:
        verdicts = check_tool(t, registry, config)
        row = {"name": t.name, **{r.lower(): v.to_json() for r, v in verdicts.items()}}
        if t.metadata is None:
            row["note"] = "not MCP+"
            warnings.append(f"{t.name}: no metadata, plain MCP tool")
        rows.append(row)
        for r, v in verdicts.items():
            if not v.passed:
                ok = False
                findings.append({"tool": t.name, "rule": r, "message": v.message, "necessity": NECESSITY[r]})
    p5 = check_p5(registry)
    if not p5.passed:
        ok = False
        findings.append({"tool": None, "rule": "P5", "message": p5.message, "necessity": NECESSITY["P5"]})
    details = {"tools": rows, "p5": p5.to_json(), "token_report": None}
    try:
        details["token_report"] = token_report(registry, config).to_json()
    except MissingSummary as exc:
        details["token_report"] = {"skipped": str(exc)}
    return VerificationReport("typecheck", ok, details=details, findings=findings, warnings=warnings)
