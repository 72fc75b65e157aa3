"""Structural congruence: canonical forms, capture-avoiding substitution, free names.

Canonical forms identify terms up to the standard laws

* ``P | Q == Q | P`` and ``(P | Q) | R == P | (Q | R)``,
* ``P | 0 == P`` and ``(new c) 0 == 0``,
* alpha-renaming of restricted names.

Parallel components are sorted by their canonical JSON and right-nested;
restricted names become ``#<depth>``. Names starting with ``#`` are reserved.
"""

from __future__ import annotations

from dataclasses import replace
from itertools import count

from .codec import term_key
from .terms import (
    NIL,
    CollectSlot,
    ErrorT,
    ExecuteS,
    Nil,
    Par,
    Pending,
    Process,
    Prompt,
    Repl,
    Resource,
    Restrict,
    ResultT,
    ToolCall,
    ToolDetail,
    ToolsList,
    Validate,
    Var,
    par,
)


def _map_values(term: Process, fn) -> Process:
    """Apply ``fn`` to every literal in a value position of ``term`` (not recursing into subterms)."""
    if isinstance(term, ExecuteS):
        return replace(term, bindings=tuple((k, fn(v)) for k, v in term.bindings))
    if isinstance(term, (ToolCall, Validate, Pending)):
        return replace(term, params=tuple((k, fn(v)) for k, v in term.params))
    if isinstance(term, ResultT):
        return ResultT(fn(term.output))
    if isinstance(term, Resource):
        return replace(term, content=fn(term.content))
    if isinstance(term, Prompt):
        return replace(term, args=tuple((k, fn(v)) for k, v in term.args))
    return term


def _value_vars(term: Process) -> set:
    found = set()

    def note(v):
        if isinstance(v, Var):
            found.add(v.name)
        return v

    _map_values(term, note)
    if isinstance(term, CollectSlot):
        note(term.value)
    return found


def parallel_components(term: Process) -> list:
    """Flatten nested Par nodes (not crossing restriction) into a list."""
    out, stack = [], [term]
    while stack:
        t = stack.pop()
        if isinstance(t, Par):
            stack.append(t.right)
            stack.append(t.left)
        else:
            out.append(t)
    return out


def canonicalize(term: Process) -> Process:
    """Return the canonical representative of ``term``'s congruence class."""
    return _canon(term, 0, {})


def _rename(env):
    def fn(v):
        if isinstance(v, Var) and v.name in env:
            return Var(env[v.name])
        return v

    return fn


def _canon(term: Process, depth: int, env: dict) -> Process:
    if isinstance(term, Par):
        parts = []
        for comp in parallel_components(term):
            c = _canon(comp, depth, env)
            parts.extend(parallel_components(c))
        parts = [p for p in parts if not isinstance(p, Nil)]
        parts.sort(key=term_key)
        return par(*parts)
    if isinstance(term, Restrict):
        name = f"#{depth}"
        body = _canon(term.body, depth + 1, {**env, term.channel: name})
        if isinstance(body, Nil):
            return NIL
        return Restrict(name, body)
    if isinstance(term, Repl):
        return Repl(_canon(term.body, depth, env))
    if isinstance(term, CollectSlot):
        inner = {k: v for k, v in env.items() if k != term.slot}
        value = _rename(env)(term.value)
        return CollectSlot(term.slot, value, _canon(term.continuation, depth, inner))
    if isinstance(term, ToolsList):
        return term
    if isinstance(term, ToolDetail):
        return term
    return _map_values(term, _rename(env)) if env else term


def free_names(term: Process) -> frozenset:
    """Names referenced in value positions and not bound by an enclosing binder.

    Restriction binds its channel; ``collect s = v . P`` binds ``s`` in ``P``.
    """
    if isinstance(term, Par):
        return free_names(term.left) | free_names(term.right)
    if isinstance(term, Restrict):
        return free_names(term.body) - {term.channel}
    if isinstance(term, Repl):
        return free_names(term.body)
    if isinstance(term, CollectSlot):
        own = {term.value.name} if isinstance(term.value, Var) else set()
        return frozenset(own) | (free_names(term.continuation) - {term.slot})
    return frozenset(_value_vars(term))


def bound_names(term: Process) -> list:
    """Restriction binders of ``term`` in pre-order (a multiset, as a list)."""
    out = []
    stack = [term]
    while stack:
        t = stack.pop()
        if isinstance(t, Restrict):
            out.append(t.channel)
            stack.append(t.body)
        elif isinstance(t, Par):
            stack.extend([t.right, t.left])
        elif isinstance(t, Repl):
            stack.append(t.body)
        elif isinstance(t, CollectSlot):
            stack.append(t.continuation)
    return out


def _fresh(base: str, avoid: set) -> str:
    for i in count(1):
        cand = f"{base}_{i}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def substitute(term: Process, slot: str, value) -> Process:
    """Replace free ``?slot`` references in ``term`` by ``value``.

    Restriction binders that would capture a substituted name are renamed.
    Substituting a name that does not occur is the identity.
    """

    def sub(v):
        return value if isinstance(v, Var) and v.name == slot else v

    if isinstance(term, Par):
        return Par(substitute(term.left, slot, value), substitute(term.right, slot, value))
    if isinstance(term, Repl):
        return Repl(substitute(term.body, slot, value))
    if isinstance(term, Restrict):
        if term.channel == slot:
            return term
        channel, body = term.channel, term.body
        if isinstance(value, Var) and value.name == channel and slot in free_names(body):
            channel = _fresh(channel, set(free_names(body)) | {value.name})
            body = substitute(body, term.channel, Var(channel))
        return Restrict(channel, substitute(body, slot, value))
    if isinstance(term, CollectSlot):
        cont = term.continuation if term.slot == slot else substitute(term.continuation, slot, value)
        return CollectSlot(term.slot, sub(term.value), cont)
    if isinstance(term, ErrorT):
        return term
    return _map_values(term, sub)


def expand_replication(term: Process, bound: int) -> tuple:
    """Unfold every ``!P`` into ``bound`` parallel copies.

    Returns ``(term, hit)`` where ``hit`` tells whether any replication was cut.
    """
    if isinstance(term, Repl):
        body, _ = expand_replication(term.body, bound)
        return par(*([body] * bound)), True
    if isinstance(term, Par):
        left, h1 = expand_replication(term.left, bound)
        right, h2 = expand_replication(term.right, bound)
        return Par(left, right), h1 or h2
    if isinstance(term, Restrict):
        body, hit = expand_replication(term.body, bound)
        return Restrict(term.channel, body), hit
    if isinstance(term, CollectSlot):
        cont, hit = expand_replication(term.continuation, bound)
        return CollectSlot(term.slot, term.value, cont), hit
    return term, False
