from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protocheck import fixtures as F
from protocheck.corpus import token_corpus, tool_plus_corpus, tool_plus_registry
from protocheck.errors import MissingMetadata, MissingSummary
from protocheck.manifest import McpRegistry
from protocheck.mapping import phi_plus_inverse
from protocheck.security import check_approval_ordering
from protocheck.semantics import ExploreConfig, build_lts
from protocheck.terms import Dependency, Fallback, FailureMode, Retry, Tool, ToolMetadata
from protocheck.typecheck import (
    TypecheckConfig,
    check_p1,
    check_p2,
    check_p3,
    check_p4,
    check_p5,
    check_tool,
    entities,
    semantic_density,
    token_report,
    tokens,
    typecheck_registry,
)
from strategies import texts


def test_tokens():
    assert tokens("") == []
    assert tokens("departure") == ["departure"]
    assert len(tokens(F.IATA_DESCRIPTION)) == 10
    assert tokens("Hello, World!") == ["hello", "world"]


def test_density_anchors():
    assert entities("departure") == 0
    assert semantic_density("departure") == 0.0
    assert entities(F.IATA_DESCRIPTION) == 3
    assert semantic_density(F.IATA_DESCRIPTION) == pytest.approx(0.3)
    assert semantic_density("") == 0.0


def test_numeric_constraint_golden():
    assert entities("stars:>100 results per page") == 1


def test_config_bounds():
    with pytest.raises(ValueError):
        TypecheckConfig(tau=0)
    with pytest.raises(ValueError):
        TypecheckConfig(k=1.5)


def test_p1():
    tool = replace(F.github_create_issue(), description=F.IATA_DESCRIPTION)
    v = check_p1(tool)
    assert not v.passed  # property descriptions are entity-free
    assert v.details["density"] == pytest.approx(0.3)
    dense = F.fetch_user_data()
    assert check_p1(replace(dense, description="departure")).passed is False


def test_p2():
    assert check_p2(F.delete_user_plus(True)).passed
    assert not check_p2(F.delete_user_plus(False)).passed
    assert not check_p2(F.delete_user()).passed
    read = F.delete_user(ToolMetadata(side_effects="read", requires_approval=False))
    assert check_p2(read).passed


def test_p3():
    assert check_p3(F.fetch_user_data(), F.fetch_user_data_registry()).passed
    lonely = McpRegistry((F.fetch_user_data(),))
    v = check_p3(F.fetch_user_data(), lonely)
    assert not v.passed and v.details["unresolved_fallbacks"]
    dup = (FailureMode("ServiceDown", Retry(1)), FailureMode("ServiceDown", Retry(2)))
    assert not check_p3(F.delete_user(ToolMetadata(failure_modes=dup))).passed
    assert not check_p3(F.delete_user(ToolMetadata(failure_modes=()))).passed


def test_p4_reports_arithmetic():
    v = check_p4(F.search_repositories())
    assert not v.passed
    assert v.details["arithmetic"].endswith("is false")
    meta = F.search_repositories().metadata
    two = replace(F.search_repositories(), metadata=replace(meta, summary="Search repositories"))
    three = replace(F.search_repositories(), metadata=replace(meta, summary="Search GitHub repositories"))
    assert check_p4(two).passed  # 2 < 2.5
    assert not check_p4(three).passed  # 3 < 2.5 is false
    assert check_p4(three, TypecheckConfig(summary_ratio=0.2)).passed


def test_p4_empty_summary_fails():
    tool = F.delete_user(ToolMetadata(summary=""))
    assert not check_p4(tool).passed


def test_p5():
    assert check_p5(F.payment_registry()).passed
    v = check_p5(F.two_cycle_registry())
    assert not v.passed and len(set(v.details["cycle"])) == 2
    a = F._plus("a", "A", requires=("b",))
    b = replace(F._plus("b", "B"), metadata=replace(F._plus("b", "B").metadata, dependencies=(Dependency("a", "ExclusiveWith"),)))
    assert check_p5(McpRegistry((a, b))).details["conflicts"] == [["a", "b"]]
    dangling = F._plus("c", "C", requires=("ghost",))
    assert check_p5(McpRegistry((dangling,))).details["unresolved"] == [["c", "ghost"]]


def test_empty_registry_passes():
    assert typecheck_registry(McpRegistry()).passed


def test_plain_registry_fails_all_five():
    rep = typecheck_registry(McpRegistry((F.github_create_issue(),)))
    assert not rep.passed
    assert {f["rule"] for f in rep.findings} == {"P1", "P2", "P3", "P4", "P5"}
    assert all(f["necessity"] for f in rep.findings)


def test_generated_registries_pass():
    for seed in range(5):
        assert typecheck_registry(tool_plus_registry(6, seed)).passed


def test_token_report():
    rep = token_report(token_corpus())
    assert rep.ratio == pytest.approx(0.19)
    assert rep.flag
    single = token_report(token_corpus(1))
    assert single.ratio > 1 and not single.flag
    with pytest.raises(MissingSummary):
        token_report(McpRegistry((F.github_create_issue(),)))


def test_token_report_zero_baseline():
    blank = Tool("t", "", metadata=ToolMetadata(summary=""))
    rep = token_report(McpRegistry((blank,)))
    assert rep.baseline == 0 and rep.ratio == 0 and rep.warnings


def test_typecheck_pass_means_inverse_total():
    reg = tool_plus_registry(5, 3)
    assert typecheck_registry(reg).passed
    for t in reg.tools:
        phi_plus_inverse(t)
    broken = replace(reg.tools[0], metadata=replace(reg.tools[0].metadata, side_effects=None))
    assert not all(v.passed for v in check_tool(broken).values())
    with pytest.raises(MissingMetadata):
        phi_plus_inverse(broken)


# --- properties ---------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(texts, st.lists(st.sampled_from(["ZRH", "JFK", ">100"]), min_size=1, max_size=3))
def test_adding_entities_never_lowers_numerator(base, extra):
    assert entities(base + " " + " ".join(extra)) >= entities(base)


@settings(max_examples=200, deadline=None)
@given(texts, st.integers(1, 5))
def test_padding_never_raises_density(base, n):
    padded = base + " " + " ".join(["word"] * n)
    assert semantic_density(padded) <= semantic_density(base)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_p2_pass_implies_approval_ordering(seed):
    reg = tool_plus_registry(2, seed)
    writers = [t for t in reg.tools if t.metadata.side_effects in ("write", "delete")]
    for t in writers:
        assert check_p2(t).passed
        one = McpRegistry((replace(t, metadata=replace(t.metadata, dependencies=())),))
        cfg = ExploreConfig(param_universe={t.name: [{s: "v" for s in t.schema.required}]})
        assert check_approval_ordering(build_lts(one.as_process(), cfg), one).passed


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_p5_pass_gives_topological_order(seed):
    reg = tool_plus_registry(6, seed)
    v = check_p5(reg)
    assert v.passed
    pos = {n: i for i, n in enumerate(v.details["order"])}
    for t in reg.tools:
        for d in t.metadata.dependencies:
            if d.relation == "Requires":
                assert pos[d.tool] < pos[t.name]


def test_fallback_recovery_is_recognised():
    modes = F.fetch_user_data().metadata.failure_modes
    assert any(isinstance(m.recovery, Fallback) for m in modes)
    assert len(tool_plus_corpus(10)) == 10


def test_punctuation_only_quote_is_not_an_entity():
    assert entities("':'") == 0
    assert semantic_density("':' word") == 0.0
