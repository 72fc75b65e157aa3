"""Seeded generators for the instance suites: intents, MCP+ tools, small LTSs, token corpora."""

from __future__ import annotations

import random

from . import labels as L
from .manifest import McpRegistry
from .semantics import Lts
from .terms import (
    Abort,
    Dependency,
    FailureMode,
    Fallback,
    Intent,
    JsonSchema,
    PropertySpec,
    Retry,
    SlotDef,
    Tool,
    ToolMetadata,
    UserPrompt,
    walk,
)

_WORDS = (
    "order", "account", "invoice", "ticket", "flight", "hotel", "payment", "user",
    "report", "message", "record", "booking", "query", "profile", "item", "review",
)
_VERBS = ("Fetches", "Creates", "Updates", "Lists", "Books", "Cancels", "Finds", "Sends")
_CODES = ("ZRH", "JFK", "LHR", "CDG", "SFO", "NRT", "USD", "EUR", "GBP", "CHF")
_ERRORS = ("NotFound", "ServiceDown", "AuthError", "ValidationError", "Timeout", "RateLimited")
_RELATIONS = ("Requires", "ProducesInputFor", "ExclusiveWith")


def _value(rng: random.Random, slot: SlotDef):
    """A value that respects the slot's enum and type."""
    if slot.possible_values:
        return rng.choice(slot.possible_values)
    return {
        "string": lambda: rng.choice(_WORDS),
        "integer": lambda: rng.randint(0, 99),
        "number": lambda: rng.randint(0, 999) / 10,
        "boolean": lambda: rng.random() < 0.5,
        "date": lambda: f"2026-0{rng.randint(1, 9)}-1{rng.randint(0, 9)}",
    }[slot.type_name]()


def _slot(rng: random.Random, name: str, describe: bool = False) -> SlotDef:
    type_name = rng.choice(("string", "string", "integer", "number", "boolean", "date"))
    values = ()
    if type_name == "string" and rng.random() < 0.5:
        values = tuple(rng.sample(_CODES, rng.randint(2, 4)))
    description = ""
    if describe:
        description = f"The {name} code, e.g. {', '.join(rng.sample(_CODES, 3))}"
    return SlotDef(name, type_name, description, values)


def _slots(rng, n_req, n_opt, describe=False):
    names = rng.sample([f"{w}_{i}" for i, w in enumerate(_WORDS)], n_req + n_opt)
    slots = [_slot(rng, n, describe) for n in names]
    return tuple(slots[:n_req]), tuple(sorted(slots[n_req:], key=lambda s: s.name))


def conforming_params(rng: random.Random, intent: Intent) -> dict:
    params = {s.name: _value(rng, s) for s in intent.required}
    for s in intent.optional:
        if rng.random() < 0.5:
            params[s.name] = _value(rng, s)
    return params


def random_intent(rng: random.Random, name: str) -> tuple:
    """``(intent, param_universe)`` with one conforming and one deficient map.

    At least one required slot so that the deficient map exists.
    """
    required, optional = _slots(rng, rng.randint(1, 4), rng.randint(0, 3))
    intent = Intent(name, f"{rng.choice(_VERBS)} a {rng.choice(_WORDS)}", required, optional, rng.random() < 0.5)
    good = conforming_params(rng, intent)
    bad = dict(good)
    del bad[rng.choice(required).name]
    return intent, {name: [good, bad]}


def intent_corpus(n: int = 200, seed: int = 0) -> list:
    rng = random.Random(seed)
    return [random_intent(rng, f"Intent{i}") for i in range(n)]


def _failure_modes(rng, others) -> tuple:
    kinds = rng.sample(_ERRORS, rng.randint(1, 3))
    modes = []
    for k in kinds:
        options = [Retry(rng.randint(1, 5)), UserPrompt(f"{k} occurred. Try again?"), Abort()]
        if others:
            options.append(Fallback(rng.choice(others)))
        modes.append(FailureMode(k, rng.choice(options)))
    return tuple(modes)


def _dependencies(rng, others) -> tuple:
    targets = rng.sample(others, min(len(others), rng.randint(0, 2)))
    return tuple(Dependency(t, rng.choice(_RELATIONS)) for t in targets)


def annotated_intent(rng: random.Random, name: str, others=()) -> Intent:
    """An intent carrying failure modes and dependencies, with known transactionality."""
    required, optional = _slots(rng, rng.randint(0, 4), rng.randint(0, 3), describe=True)
    desc = f"{rng.choice(_VERBS)} the {rng.choice(_WORDS)}. Works with {', '.join(rng.sample(_CODES, 3))}."
    return Intent(
        name, desc, required, optional, rng.random() < 0.5,
        _failure_modes(rng, list(others)), _dependencies(rng, list(others)),
    )


def annotated_intents(n: int = 1000, seed: int = 0) -> list:
    rng = random.Random(seed)
    names = [f"intent_{i}" for i in range(n)]
    return [annotated_intent(rng, name, names[max(0, i - 3) : i]) for i, name in enumerate(names)]


def entity_rich_description(rng: random.Random, summary: str, n_pairs: int = 40) -> str:
    """``summary`` followed by key:value filters, dense enough for P1 and long enough for P4."""
    pairs = " ".join(f"{rng.choice(_WORDS)}:{rng.choice(_CODES).lower()}{i}" for i in range(n_pairs))
    return f"{summary} Accepts filters {pairs} and returns matching records."


def random_tool_plus(rng: random.Random, name: str, others=()) -> Tool:
    """A type-correct MCP+ tool in the image form of the metadata-preserving map."""
    write = rng.random() < 0.5
    summary = f"{rng.choice(_VERBS)} {rng.choice(_WORDS)} records."
    required, optional = _slots(rng, rng.randint(0, 3), rng.randint(0, 2), describe=True)
    props = {s.name: PropertySpec(s.type_name, s.description, s.possible_values or None) for s in required + optional}
    deps = tuple(d for d in _dependencies(rng, list(others)) if d.relation != "ExclusiveWith")
    meta = ToolMetadata(
        side_effects="write" if write else "read",
        requires_approval=write,
        failure_modes=_failure_modes(rng, list(others)),
        summary=summary,
        dependencies=deps,
    )
    return Tool(name, entity_rich_description(rng, summary), JsonSchema(tuple(s.name for s in required), props), meta)


def tool_plus_registry(n: int = 5, seed: int = 0, rng: random.Random | None = None, prefix: str = "tool") -> McpRegistry:
    """Tools only depend on or fall back to earlier tools, so the Requires graph is acyclic."""
    rng = rng or random.Random(seed)
    names = [f"{prefix}_{i}" for i in range(n)]
    return McpRegistry(tuple(random_tool_plus(rng, name, names[:i]) for i, name in enumerate(names)))


def tool_plus_corpus(n: int = 1000, seed: int = 0, per_registry: int = 5) -> list:
    rng = random.Random(seed)
    tools = []
    for r in range(0, n, per_registry):
        tools += tool_plus_registry(min(per_registry, n - r), rng=rng, prefix=f"r{r}").tools
    return tools


# ---------------------------------------------------------------------------
# LTSs


def random_lts(rng: random.Random, max_states: int = 8, max_labels: int = 4, silent: bool = True) -> Lts:
    n = rng.randint(1, max_states)
    k = rng.randint(1, max_labels)
    pool = [L.Execute(c) for c in "abcd"[:k]]
    if silent and k > 1 and rng.random() < 0.5:
        pool[-1] = L.Tau("validate")
    edges = set()
    for _ in range(rng.randint(0, 2 * n)):
        edges.add((rng.randrange(n), rng.choice(pool), rng.randrange(n)))
    return Lts.from_edges(n, sorted(edges, key=lambda e: (e[0], str(e[1]), e[2])))


def perturb(rng: random.Random, lts: Lts) -> Lts:
    """Copy an LTS with one state duplicated; the copy is bisimilar to the original."""
    n = lts.num_states
    dup = rng.randrange(n)
    edges = list(lts.transitions)
    for s, lab, d in lts.transitions:
        if s == dup:
            edges.append((n, lab, d))
        if d == dup and rng.random() < 0.5:
            edges.append((s, lab, n))
    return Lts.from_edges(n + 1, edges, lts.initial)


def lts_pairs(n: int = 500, seed: int = 0, max_states: int = 8, max_labels: int = 4) -> list:
    """Half independent pairs, half (LTS, perturbed copy of it)."""
    rng = random.Random(seed)
    out = []
    for i in range(n):
        a = random_lts(rng, max_states, max_labels)
        if i % 2:
            b = random_lts(rng, max_states, max_labels)
        else:
            a = random_lts(rng, max_states - 1, max_labels)
            b = perturb(rng, a)
        out.append((a, b))
    return out


# ---------------------------------------------------------------------------
# token budget


def token_corpus(n: int = 50, description_tokens: int = 100, summary_tokens: int = 9, seed: int = 0) -> McpRegistry:
    """Tools whose summaries are ``summary_tokens`` long against ``description_tokens`` descriptions."""
    rng = random.Random(seed)
    tools = []
    for i in range(n):
        desc = " ".join(rng.choice(_WORDS) for _ in range(description_tokens))
        summary = " ".join(rng.choice(_WORDS) for _ in range(summary_tokens))
        meta = ToolMetadata(side_effects="read", requires_approval=False, failure_modes=(), summary=summary, dependencies=())
        tools.append(Tool(f"bulk_{i}", desc, JsonSchema(), meta))
    return McpRegistry(tuple(tools))


# ---------------------------------------------------------------------------
# universes


def default_universe(term, seed: int = 0) -> dict:
    """One conforming parameter map for every intent and tool in ``term``."""
    rng = random.Random(seed)
    universe = {}
    for t in walk(term):
        if isinstance(t, Intent):
            universe.setdefault(t.name, [{s.name: _value(rng, s) for s in t.required}])
        elif isinstance(t, Tool):
            params = {}
            for name in t.schema.required:
                p = t.schema.prop(name)
                params[name] = _value(rng, SlotDef(name, p.type_name, "", p.enum or ()))
            universe.setdefault(t.name, [params])
    return universe
