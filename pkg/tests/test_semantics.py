from __future__ import annotations

from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protocheck import fixtures as F
from protocheck import labels as L
from protocheck.errors import ExploreError, NotMcpTerm, NotSgdTerm
from protocheck.rules import rule_fixtures
from protocheck.semantics import (
    CANCELLED,
    ExploreConfig,
    Lts,
    build_lts,
    conforms,
    mcp_step,
    sgd_step,
    traces,
)
from protocheck.terms import NIL, ErrorT, ExecuteS, Intent, Par, Repl, Resource, ResultT, SlotDef, ToolCall
from strategies import params, schemas, small_mcp


def kinds(trace):
    return tuple(type(x).__name__ for x in trace)


@pytest.mark.parametrize("fx", rule_fixtures(), ids=lambda fx: fx.rule)
def test_rule_fixture(fx):
    assert fx.successors() == fx.expected_successors()


def test_nil_has_no_moves():
    assert sgd_step(NIL) == []
    assert mcp_step(NIL) == []
    lts = build_lts(NIL)
    assert lts.num_states == 1 and lts.transitions == []
    assert set(traces(lts, 3)) == {()}


def test_step_rejects_wrong_calculus():
    with pytest.raises(NotSgdTerm):
        sgd_step(F.github_create_issue())
    with pytest.raises(NotMcpTerm):
        mcp_step(F.book_flight())


def test_missing_universe_entry():
    with pytest.raises(ExploreError):
        build_lts(F.book_flight())


def test_config_bounds():
    with pytest.raises(ValueError):
        ExploreConfig(max_states=0)
    with pytest.raises(ValueError):
        ExploreConfig(repl_unfold_bound=-1)


def test_bookflight_lts():
    lts = build_lts(F.book_flight(), F.book_flight_config())
    # Intent, ExecuteS, ResultT, ErrorT and the terminated process
    assert lts.num_states == 5
    assert not lts.truncated
    ts = traces(lts, 3)
    assert ("Invoke", "Execute", "Result") in {kinds(t) for t in ts}
    errs = [x for x in lts.labels() if isinstance(x, L.Error)]
    assert errs == [L.Error("MissingSlots", "missing: date")]


def test_empty_required_always_invokes():
    intent = Intent("ping", "", (), (SlotDef("x"),), False)
    lts = build_lts(intent, ExploreConfig(param_universe={"ping": [{}, {"x": 1}]}))
    assert all(not isinstance(x, L.Error) for x in lts.labels())


def test_github_trace():
    lts = build_lts(F.github_create_issue(), F.github_config())
    assert ("Call", "Tau", "Execute", "Result") in {kinds(t) for t in traces(lts, 4)}


def test_validation_error():
    issue = F.github_create_issue()
    lts = build_lts(issue, ExploreConfig(param_universe={"create_issue": [{"owner": "a"}]}))
    errs = [x for x in lts.labels() if isinstance(x, L.Error)]
    assert errs == [L.Error("ValidationError", "missing: repo,title")]


def test_resource_read():
    r = F.app_log_resource()
    assert mcp_step(r) == [(L.Read(r.uri), ResultT(r.content))]


def test_resource_diamond():
    r = Resource("mem://a", "c")
    lts = build_lts(Par(r, r))
    # R|R, Res|R, Res|Res, R, Res, 0: reading and emitting interleave
    assert lts.num_states == 6


def test_tool_write_traces():
    reg = F.tool_write_registry()
    lts = build_lts(reg.as_process(), ExploreConfig(param_universe=F.TOOL_WRITE_CONFIG))
    ts = traces(lts, 5)
    shapes = {kinds(t) for t in ts}
    assert ("Call", "Tau", "Approval", "Execute", "Result") in shapes
    refused = [t for t in ts if kinds(t) == ("Call", "Tau", "Approval", "Result")]
    assert refused and all(t[2].confirm is False and t[3].output == CANCELLED for t in refused)


def test_replication_is_bounded():
    r = Repl(Resource("mem://a", "c"))
    lts = build_lts(r, ExploreConfig(repl_unfold_bound=2))
    assert lts.truncated
    reads = max(sum(isinstance(x, L.Read) for x in t) for t in traces(lts, 8))
    assert reads == 2


def test_max_states_truncates():
    lts = build_lts(F.book_flight(), F.book_flight_config(max_states=2))
    assert lts.truncated and lts.num_states == 2
    assert traces(lts, 4).partial


def test_lts_json_round_trip():
    lts = build_lts(F.book_flight(), F.book_flight_config())
    back = Lts.from_json(lts.to_json())
    assert back.states == lts.states and back.transitions == lts.transitions
    assert "digraph" in lts.to_dot()


def test_lts_rejects_bad_edges():
    with pytest.raises(ValueError):
        Lts.from_edges(2, [(0, L.Execute("a"), 5)])


def test_execute_uses_oracle_deterministically():
    t = ExecuteS("f", {"a": 1})
    assert sgd_step(t) == sgd_step(t)
    ((lab, nxt),) = sgd_step(t)
    assert lab == L.Execute("f") and isinstance(nxt, ResultT)


# --- properties ---------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(params, schemas())
def test_conforms_matches_definition(p, schema):
    ok = all(r in p for r in schema.required)
    for name, spec in schema.properties:
        if name in p and spec.enum is not None:
            ok = ok and any(type(p[name]) is type(v) and p[name] == v for v in spec.enum)
    assert conforms(p, schema) == ok


def shuffles(a, b):
    n = len(a) + len(b)
    out = set()
    for pos in combinations(range(n), len(a)):
        ia, ib, t = iter(a), iter(b), []
        for i in range(n):
            t.append(next(ia) if i in pos else next(ib))
        out.add(tuple(t))
    return out


@settings(max_examples=80, deadline=None)
@given(small_mcp, small_mcp)
def test_par_is_interleaving(a, b):
    cfg = ExploreConfig(param_universe={"a": [{}], "b": [{}]})
    ta, tb = traces(build_lts(a, cfg), 4), traces(build_lts(b, cfg), 4)
    expected = {s for x in ta for y in tb if len(x) + len(y) <= 4 for s in shuffles(x, y)}
    assert set(traces(build_lts(Par(a, b), cfg), 4)) == expected


@settings(max_examples=80, deadline=None)
@given(small_mcp)
def test_states_are_distinct_canonical_forms(t):
    from protocheck.codec import term_key
    from protocheck.congruence import canonicalize

    lts = build_lts(t, ExploreConfig(param_universe={"a": [{}], "b": [{}]}))
    keys = [term_key(s) for s in lts.states]
    assert len(set(keys)) == len(keys)
    assert all(canonicalize(s) == s for s in lts.states)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["ZRH", "JFK"]), min_size=0, max_size=3))
def test_error_iff_required_missing(present):
    cfg_params = {k: "ZRH" for k in ("origin", "destination", "date")[: len(present)]}
    lts = build_lts(F.book_flight(), ExploreConfig(param_universe={"BookFlight": [cfg_params]}))
    has_error = any(isinstance(x, L.Error) for x in lts.labels())
    assert has_error == (len(cfg_params) < 3)
    assert any(isinstance(s, ErrorT) for s in lts.states) == has_error
    assert any(isinstance(s, ToolCall) for s in lts.states) is False
