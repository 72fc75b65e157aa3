"""Action classes, bisimulation and trace equivalence between two LTSs.

Labels are first normalized into action classes so that an SGD ``invoke`` and
an MCP ``call`` with the same payload coincide and ``collect``/``tau`` become
silent. Weak mode saturates the transition relation with silent steps.

Inequivalence witnesses are distinguishing formulas (``true``, ``not``,
``and``, ``dia``) built from the refinement history; :func:`replay_witness`
evaluates them on either LTS.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import labels as L
from .codec import dumps, literal_to_json, params_to_json
from .errors import TooLarge
from .semantics import Lts

MISSING_REQUIRED = ("MissingSlots", "ValidationError")


@dataclass(frozen=True, order=True)
class ActionClass:
    kind: str
    payload: str = ""

    @property
    def silent(self) -> bool:
        return self.kind == "silent"

    def __str__(self):
        return self.kind if not self.payload else f"{self.kind}:{self.payload}"


SILENT = ActionClass("silent")


def normalize_label(label, unify_errors: bool = True) -> ActionClass:
    """Map a transition label to its action class."""
    if isinstance(label, (L.Invoke, L.Call)):
        return ActionClass("invoke", dumps([label.name, params_to_json(label.params)]))
    if isinstance(label, (L.Collect, L.Tau)):
        return SILENT
    if isinstance(label, L.Execute):
        return ActionClass("execute", label.name)
    if isinstance(label, L.Result):
        return ActionClass("result", dumps(literal_to_json(label.output)))
    if isinstance(label, L.Error):
        if unify_errors and label.error_type in MISSING_REQUIRED:
            return ActionClass("missing_required", str(label.message))
        return ActionClass("error", dumps([label.error_type, str(label.message)]))
    if isinstance(label, L.Read):
        return ActionClass("read", label.uri)
    if isinstance(label, L.List):
        return ActionClass("list", label.filter)
    if isinstance(label, L.Approval):
        return ActionClass("approval", dumps([label.tool, label.confirm]))
    if isinstance(label, L.Requires):
        return ActionClass("requires", label.token)
    if isinstance(label, L.Detail):
        return ActionClass("detail", label.name)
    raise TypeError(f"not a transition label: {label!r}")


@dataclass
class EquivalenceVerdict:
    equivalent: bool
    witness: dict | None = None
    inconclusive: bool = False
    mode: str = "weak"
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.equivalent

    @property
    def exit_code(self) -> int:
        if self.inconclusive:
            return 2
        return 0 if self.equivalent else 1

    def to_json(self) -> dict:
        out = {"equivalent": self.equivalent, "inconclusive": self.inconclusive, "mode": self.mode}
        if self.witness is not None:
            out["witness"] = self.witness
        out.update(self.details)
        return out


# ---------------------------------------------------------------------------
# normalized move graphs


def _check_mode(mode):
    if mode not in ("strong", "weak"):
        raise ValueError("mode must be 'strong' or 'weak'")


def silent_closure(n: int, silent_edges) -> list:
    """For each state the set reachable by zero or more silent steps (BFS)."""
    adj = [[] for _ in range(n)]
    for s, t in silent_edges:
        adj[s].append(t)
    out = []
    for s in range(n):
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        out.append(frozenset(seen))
    return out


def moves(lts: Lts, mode: str = "weak", unify_errors: bool = True) -> list:
    """Per state: ``{ActionClass: frozenset(targets)}``, saturated in weak mode."""
    _check_mode(mode)
    n = lts.num_states
    strong = [dict() for _ in range(n)]
    for s, label, t in lts.transitions:
        strong[s].setdefault(normalize_label(label, unify_errors), set()).add(t)
    if mode == "strong":
        return [{c: frozenset(ts) for c, ts in m.items()} for m in strong]
    eps = silent_closure(n, [(s, t) for s in range(n) for t in strong[s].get(SILENT, ())])
    out = []
    for s in range(n):
        m: dict = {SILENT: set(eps[s])}
        for u in eps[s]:
            for c, ts in strong[u].items():
                if c.silent:
                    continue
                bucket = m.setdefault(c, set())
                for t in ts:
                    bucket |= eps[t]
        out.append({c: frozenset(ts) for c, ts in m.items()})
    return out


def _union(ma: list, mb: list) -> list:
    off = len(ma)
    shifted = [{c: frozenset(t + off for t in ts) for c, ts in m.items()} for m in mb]
    return ma + shifted


def _refine(graph: list) -> list:
    """Signature-based partition refinement; returns the block map of every level."""
    n = len(graph)
    block = [0] * n
    levels = [block]
    while True:
        sigs = {}
        new = []
        for s in range(n):
            sig = (block[s], frozenset((c, block[t]) for c, ts in graph[s].items() for t in ts))
            new.append(sigs.setdefault(sig, len(sigs)))
        if len(sigs) == len(set(block)):
            return levels
        block = new
        levels.append(block)


def _distinguish(graph, levels, x, y, memo) -> tuple:
    """Formula true at ``x`` and false at ``y``, for states split by the refinement."""
    key = (x, y)
    if key in memo:
        return memo[key]
    k = next(i for i, lv in enumerate(levels) if lv[x] != lv[y])
    prev = levels[k - 1]
    formula = None
    for first, second, negate in ((x, y, False), (y, x, True)):
        for c in sorted(graph[first], key=str):
            for t in sorted(graph[first][c]):
                partners = graph[second].get(c, ())
                if all(prev[u] != prev[t] for u in partners):
                    parts = [_distinguish(graph, levels, t, u, memo) for u in sorted(partners)]
                    body = ("and", tuple(parts)) if parts else ("true",)
                    formula = ("dia", c, body)
                    if negate:
                        formula = ("not", formula)
                    break
            if formula:
                break
        if formula:
            break
    if formula is None:  # k == 0 cannot split; levels are built from signatures
        raise AssertionError("no distinguishing move found")
    memo[key] = formula
    return formula


def holds(graph: list, state: int, formula) -> bool:
    tag = formula[0]
    if tag == "true":
        return True
    if tag == "not":
        return not holds(graph, state, formula[1])
    if tag == "and":
        return all(holds(graph, state, f) for f in formula[1])
    if tag == "dia":
        return any(holds(graph, t, formula[2]) for t in graph[state].get(formula[1], ()))
    raise ValueError(f"bad formula {formula!r}")


def formula_to_json(formula):
    tag = formula[0]
    if tag == "true":
        return True
    if tag == "not":
        return {"not": formula_to_json(formula[1])}
    if tag == "and":
        return {"and": [formula_to_json(f) for f in formula[1]]}
    return {"dia": str(formula[1]), "then": formula_to_json(formula[2])}


def formula_from_json(obj):
    if obj is True:
        return ("true",)
    if "not" in obj:
        return ("not", formula_from_json(obj["not"]))
    if "and" in obj:
        return ("and", tuple(formula_from_json(f) for f in obj["and"]))
    kind, _, payload = obj["dia"].partition(":")
    return ("dia", ActionClass(kind, payload), formula_from_json(obj["then"]))


def _first_path(formula) -> list:
    """The action sequence along the leading diamonds of a formula."""
    path = []
    while formula[0] in ("dia", "not", "and"):
        if formula[0] == "not":
            formula = formula[1]
        elif formula[0] == "and":
            if not formula[1]:
                break
            formula = formula[1][0]
        else:
            path.append(str(formula[1]))
            formula = formula[2]
    return path


def bisimilar(a: Lts, b: Lts, mode: str = "weak", unify_errors: bool = True) -> EquivalenceVerdict:
    """Partition refinement over the disjoint union of the two normalized LTSs."""
    ma, mb = moves(a, mode, unify_errors), moves(b, mode, unify_errors)
    graph = _union(ma, mb)
    x, y = a.initial, len(ma) + b.initial
    levels = _refine(graph)
    final = levels[-1]
    inconclusive = a.truncated or b.truncated
    details = {"blocks": len(set(final)), "rounds": len(levels) - 1}
    if final[x] == final[y]:
        return EquivalenceVerdict(True, None, inconclusive, mode, details)
    formula = _distinguish(graph, levels, x, y, {})
    witness = {
        "kind": "formula",
        "formula": formula_to_json(formula),
        "holds_on": "a",
        "path": _first_path(formula),
        "pair": [a.initial, b.initial],
    }
    return EquivalenceVerdict(False, witness, inconclusive, mode, details)


def replay_witness(lts: Lts, witness: dict, mode: str = "weak", unify_errors: bool = True) -> bool:
    """Does ``lts`` (from its initial state) satisfy the witness?

    A formula witness holds on the LTS named in ``holds_on`` and fails on the
    other. A trace witness is an observable trace the LTS can or cannot produce.
    """
    if witness["kind"] == "formula":
        graph = moves(lts, mode, unify_errors)
        return holds(graph, lts.initial, formula_from_json(witness["formula"]))
    if witness["kind"] == "trace":
        return can_produce(lts, witness["trace"], unify_errors)
    if witness["kind"] == "pair":
        return True
    raise ValueError(f"unknown witness kind {witness['kind']!r}")


# ---------------------------------------------------------------------------
# brute-force oracle


def _closure_fixpoint(n: int, silent_edges) -> list:
    """Reflexive-transitive closure by naive relaxation (independent of BFS)."""
    reach = [{s} for s in range(n)]
    changed = True
    while changed:
        changed = False
        for s, t in silent_edges:
            for u in range(n):
                if s in reach[u] and not reach[t] <= reach[u]:
                    reach[u] |= reach[t]
                    changed = True
    return reach


def _brute_moves(lts: Lts, mode: str, unify_errors: bool) -> list:
    n = lts.num_states
    edges = [(s, normalize_label(lab, unify_errors), t) for s, lab, t in lts.transitions]
    if mode == "strong":
        return [{(c, t) for s2, c, t in edges if s2 == s} for s in range(n)]
    reach = _closure_fixpoint(n, [(s, t) for s, c, t in edges if c.silent])
    out = []
    for s in range(n):
        m = {(SILENT, t) for t in reach[s]}
        for u, c, v in edges:
            if not c.silent and u in reach[s]:
                m |= {(c, w) for w in reach[v]}
        out.append(m)
    return out


def brute_force_bisim(a: Lts, b: Lts, mode: str = "weak", unify_errors: bool = True) -> EquivalenceVerdict:
    """Greatest fixpoint from the full relation ``S_a x S_b``."""
    _check_mode(mode)
    if a.num_states * b.num_states > 10**6:
        raise TooLarge(f"{a.num_states} x {b.num_states} state pairs exceed the oracle limit")
    ma, mb = _brute_moves(a, mode, unify_errors), _brute_moves(b, mode, unify_errors)
    rel = {(s, t) for s in range(a.num_states) for t in range(b.num_states)}
    removed = {}
    changed = True
    while changed:
        changed = False
        for s, t in sorted(rel):
            bad = None
            for c, s2 in ma[s]:
                if not any(c2 == c and (s2, t2) in rel for c2, t2 in mb[t]):
                    bad = ("a", c)
                    break
            if bad is None:
                for c, t2 in mb[t]:
                    if not any(c2 == c and (s2, t2) in rel for c2, s2 in ma[s]):
                        bad = ("b", c)
                        break
            if bad is not None:
                rel.discard((s, t))
                removed[(s, t)] = bad
                changed = True
    inconclusive = a.truncated or b.truncated
    start = (a.initial, b.initial)
    if start in rel:
        return EquivalenceVerdict(True, None, inconclusive, mode, {"relation_size": len(rel)})
    side, c = removed[start]
    witness = {"kind": "pair", "pair": list(start), "action": str(c), "side": side}
    return EquivalenceVerdict(False, witness, inconclusive, mode, {"relation_size": len(rel)})


# ---------------------------------------------------------------------------
# traces


def _observable(lts: Lts, unify_errors: bool):
    n = lts.num_states
    strong = [dict() for _ in range(n)]
    for s, label, t in lts.transitions:
        strong[s].setdefault(normalize_label(label, unify_errors), set()).add(t)
    eps = silent_closure(n, [(s, t) for s in range(n) for t in strong[s].get(SILENT, ())])

    def after(states, c):
        out = set()
        for s in states:
            for t in strong[s].get(c, ()):
                out |= eps[t]
        return frozenset(out)

    def enabled(states):
        return {c for s in states for c in strong[s] if not c.silent}

    return eps[lts.initial], after, enabled


def observable_traces(lts: Lts, max_len: int, unify_errors: bool = True) -> set:
    """Observable class sequences up to ``max_len`` (silent steps erased)."""
    start, after, enabled = _observable(lts, unify_errors)
    out = {()}
    frontier = {((), start)}
    for _ in range(max_len):
        nxt = set()
        for trace, states in frontier:
            for c in enabled(states):
                t = trace + (c,)
                out.add(t)
                nxt.add((t, after(states, c)))
        frontier = nxt
    return out


def can_produce(lts: Lts, trace, unify_errors: bool = True) -> bool:
    start, after, _ = _observable(lts, unify_errors)
    states = start
    for item in trace:
        c = item if isinstance(item, ActionClass) else ActionClass(*str(item).partition(":")[::2])
        states = after(states, c)
        if not states:
            return False
    return True


def trace_equivalent(a: Lts, b: Lts, max_len: int = 6, unify_errors: bool = True) -> EquivalenceVerdict:
    """Compare observable trace sets up to ``max_len`` via a paired subset construction."""
    sa, after_a, en_a = _observable(a, unify_errors)
    sb, after_b, en_b = _observable(b, unify_errors)
    inconclusive = a.truncated or b.truncated
    seen = {(sa, sb)}
    queue = deque([((), sa, sb)])
    while queue:
        trace, xa, xb = queue.popleft()
        if len(trace) >= max_len:
            continue
        ea, eb = en_a(xa), en_b(xb)
        diff = sorted(ea ^ eb)
        if diff:
            c = diff[0]
            witness = {
                "kind": "trace",
                "trace": [str(t) for t in trace + (c,)],
                "produced_by": "a" if c in ea else "b",
            }
            return EquivalenceVerdict(False, witness, inconclusive, "trace", {"max_len": max_len})
        for c in sorted(ea):
            pair = (after_a(xa, c), after_b(xb, c))
            if pair not in seen:
                seen.add(pair)
                queue.append((trace + (c,), *pair))
    return EquivalenceVerdict(True, None, inconclusive, "trace", {"max_len": max_len})
