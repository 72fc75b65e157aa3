from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protocheck import fixtures as F
from protocheck.corpus import tool_plus_corpus
from protocheck.errors import McpPlusNotAccepted, MissingMetadata, NotMcpTerm, NotSgdTerm, UnknownTransactionality
from protocheck.mapping import (
    Mapped,
    NoPreimage,
    UndefinedMapping,
    decode_bindings,
    encode_bindings,
    eq,
    first_sentence,
    phi,
    phi_inverse,
    phi_plus,
    phi_plus_inverse,
    round_trip_report,
    structural_eq,
)
from protocheck.terms import (
    NIL,
    CollectSlot,
    ExecuteS,
    FailureMode,
    Initialize,
    Intent,
    Par,
    Prompt,
    Repl,
    Resource,
    Restrict,
    Retry,
    ToolCall,
    ToolMetadata,
    ToolsList,
    TriBool,
    Validate,
    Var,
    walk,
)
from protocheck.typecheck import check_tool
from strategies import channels, intents, params, sgd_terms


def test_phi_bookflight_schema():
    tool = phi(F.book_flight())
    assert tool.schema.required == ("origin", "destination", "date")
    assert tool.schema.prop("origin").enum == ("ZRH", "JFK", "LHR")
    assert tool.schema.prop("date").enum is None
    assert tool.schema.prop("class").enum == ("economy", "business")
    assert tool.metadata is None


def test_phi_nil():
    assert phi(NIL) == NIL


def test_phi_rejects_mcp():
    with pytest.raises(NotSgdTerm):
        phi(F.github_create_issue())


def test_phi_maps_collect_to_filled_call():
    t = CollectSlot("x", 1, ExecuteS("f", {"x": Var("x")}))
    assert phi(t) == ToolCall("f", {"x": 1})


def test_counterexample_one():
    out = phi_inverse(F.delete_user())
    assert isinstance(out, Mapped)
    assert out.term.transactional is TriBool.UNKNOWN
    assert [w.field for w in out.warnings] == ["transactionality"]


@pytest.mark.parametrize(
    "term, reason",
    [
        (F.app_log_resource(), "NoSgdEquivalentResource"),
        (F.discovery_term(), "NoSgdEquivalentInitialize"),
        (Prompt("greet", {}), "NoSgdEquivalentPrompt"),
        (ToolsList(), "NoSgdEquivalentToolsList"),
        (Par(F.github_create_issue(), F.app_log_resource()), "NoSgdEquivalentResource"),
    ],
)
def test_undefined_inverse(term, reason):
    out = phi_inverse(term)
    assert isinstance(out, UndefinedMapping) and out.reason == reason
    assert not hasattr(out, "term")


def test_inverse_argument_checks():
    with pytest.raises(McpPlusNotAccepted):
        phi_inverse(F.delete_user_plus())
    with pytest.raises(NotMcpTerm):
        phi_inverse(F.book_flight())
    with pytest.raises(NoPreimage):
        tool = F.github_create_issue()
        phi_inverse(Validate(tool.name, F.GITHUB_CALL, tool.schema))


def test_phi_plus_bookflight():
    meta = phi_plus(F.book_flight()).metadata
    assert meta.side_effects == "write" and meta.requires_approval is True
    assert meta.summary == "Books a flight reservation"


def test_phi_plus_read_branch():
    meta = phi_plus(replace(F.create_order_intent(), transactional=TriBool.FALSE)).metadata
    assert meta.side_effects == "read" and meta.requires_approval is False


def test_phi_plus_keeps_failure_modes():
    intent = replace(F.book_flight(), failure_modes=(FailureMode("ServiceDown", Retry(3)),))
    assert phi_plus(intent).metadata.failure_modes == (FailureMode("ServiceDown", Retry(3)),)


def test_phi_plus_needs_transactionality():
    with pytest.raises(UnknownTransactionality):
        phi_plus(replace(F.book_flight(), transactional=TriBool.UNKNOWN))


def test_phi_plus_round_trip_bookflight():
    assert eq(phi_plus_inverse(phi_plus(F.book_flight())), F.book_flight())


def test_delete_is_transactional():
    meta = ToolMetadata("delete", True, (), "Deletes a user.", ())
    assert phi_plus_inverse(F.delete_user(meta)).transactional is TriBool.TRUE


@pytest.mark.parametrize("field", ["side_effects", "requires_approval", "failure_modes", "dependencies"])
def test_missing_metadata_names_field(field):
    tool = phi_plus(F.book_flight())
    stripped = replace(tool, metadata=replace(tool.metadata, **{field: None}))
    with pytest.raises(MissingMetadata) as info:
        phi_plus_inverse(stripped)
    assert info.value.field == field


def test_round_trip_report_plain():
    rep = round_trip_report(F.create_order_intent(), "plain")
    assert not rep.passed
    assert rep.details["diff"] == {"create_order": {"transactional": ["true", "?"]}}
    off = round_trip_report(replace(F.create_order_intent(), transactional=TriBool.FALSE), "plain")
    assert off.details["diff"] == {"create_order": {"transactional": ["false", "?"]}}


def test_round_trip_report_plus():
    assert round_trip_report(F.create_order_intent(), "plus").passed
    assert round_trip_report(phi_plus(F.create_order_intent()), "plus").passed
    with pytest.raises(ValueError):
        round_trip_report(NIL, "fancy")


def test_non_injective_inverse():
    t1, t2 = F.transfer_funds_pair()
    i1, i2 = phi_inverse(t1).term, phi_inverse(t2).term
    assert not eq(t1, t2)
    assert structural_eq(i1, i2)
    assert i1.description != i2.description


def test_first_sentence():
    assert first_sentence("Books a flight. Then more.") == "Books a flight."
    assert first_sentence("v1.2 release notes") == "v1.2 release notes"
    assert first_sentence("") == ""


# --- properties ---------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(sgd_terms, sgd_terms, channels)
def test_phi_homomorphism(a, b, c):
    assert phi(Par(a, b)) == Par(phi(a), phi(b))
    assert phi(Restrict(c, a)) == Restrict(c, phi(a))
    assert phi(Repl(a)) == Repl(phi(a))


@settings(max_examples=150, deadline=None)
@given(sgd_terms)
def test_phi_image_has_no_unmappable_primitives(t):
    for image in (phi(t), phi_plus(t)):
        assert not any(isinstance(x, (Resource, Prompt, Initialize, ToolsList)) for x in walk(image))


@settings(max_examples=150, deadline=None)
@given(params)
def test_bindings_codec_is_bijective(p):
    assert encode_bindings(decode_bindings(encode_bindings(p))) == encode_bindings(p)
    assert dict(decode_bindings(encode_bindings(p))) == p


def _sorted_optional(i: Intent) -> Intent:
    return replace(i, optional=tuple(sorted(i.optional, key=lambda s: s.name)))


# the inverse needs a description to recover from, so blank ones are out of scope here
described = intents().map(_sorted_optional).filter(lambda i: str(i.description).strip())


@settings(max_examples=200, deadline=None)
@given(described)
def test_phi_plus_left_inverse(intent):
    assert phi_plus_inverse(phi_plus(intent)) == intent


@settings(max_examples=100, deadline=None)
@given(st.lists(described, min_size=2, max_size=5))
def test_phi_plus_injective(items):
    distinct = set(items)
    assert len({phi_plus(i) for i in distinct}) == len(distinct)


def test_phi_plus_right_inverse_on_checked_tools():
    for tool in tool_plus_corpus(100, seed=7):
        assert all(v.passed for v in check_tool(tool).values())
        assert phi_plus(phi_plus_inverse(tool)) == tool
