"""Acceptance criteria 1-10, each at its stated tolerance and time budget."""

from __future__ import annotations

import time
from dataclasses import replace

import pytest

from conftest import ACCEPTANCE
from protocheck import fixtures as F
from protocheck.corpus import annotated_intents, intent_corpus, lts_pairs, token_corpus, tool_plus_corpus
from protocheck.equivalence import bisimilar, brute_force_bisim, replay_witness, trace_equivalent
from protocheck.errors import MissingMetadata
from protocheck.manifest import McpRegistry
from protocheck.mapping import (
    Mapped,
    UndefinedMapping,
    eq,
    phi,
    phi_inverse,
    phi_plus,
    phi_plus_inverse,
    round_trip_report,
    structural_eq,
)
from protocheck.rules import mcp_rule_fixtures, sgd_rule_fixtures
from protocheck.security import (
    brute_force_approval,
    brute_force_dependency,
    check_approval_ordering,
    check_confinement,
    check_dependency_ordering,
    check_inert_descriptions,
    replayable,
)
from protocheck.semantics import ExploreConfig, build_lts
from protocheck.terms import TriBool
from protocheck.typecheck import check_p2, check_p3, check_p4, check_p5, check_tool, semantic_density, token_report


def record(n: int, checks: dict, elapsed: float | None = None, budget: float | None = None):
    """Store the verdict for the summary, then fail with the names of any failed checks."""
    if budget is not None:
        checks[f"runtime {elapsed:.2f}s < {budget:g}s"] = elapsed < budget
    failed = [name for name, ok in checks.items() if not ok]
    passed = sum(bool(v) for v in checks.values())
    detail = f"{passed}/{len(checks)} checks"
    if elapsed is not None:
        detail += f", {elapsed:.2f}s"
    if failed:
        detail += "; failed: " + ", ".join(failed)
    ACCEPTANCE[n] = (not failed, detail)
    print(f"criterion {n}: {'PASS' if not failed else 'FAIL'} ({detail})")
    assert not failed, detail


@pytest.fixture(scope="module")
def corpus():
    return intent_corpus(200, seed=0)


def _pair(intent, universe):
    cfg = ExploreConfig(param_universe=universe)
    return build_lts(intent, cfg), build_lts(phi(intent), cfg)


def test_criterion_1_rule_fixtures():
    start = time.perf_counter()
    checks = {}
    sgd, mcp = sgd_rule_fixtures(), mcp_rule_fixtures()
    checks["7 SGD rules"] = len({fx.rule for fx in sgd}) == 7
    checks["7 MCP rules"] = len({fx.rule for fx in mcp}) == 7
    for fx in sgd + mcp:
        checks[fx.rule] = fx.successors() == fx.expected_successors()
    record(1, checks, time.perf_counter() - start, 1.0)


def test_criterion_2_image_bisimilar(corpus):
    start = time.perf_counter()
    ok = 0
    for intent, universe in corpus:
        a, b = _pair(intent, universe)
        v = bisimilar(a, b, "weak", unify_errors=True)
        ok += v.equivalent and not v.inconclusive
    elapsed = time.perf_counter() - start
    shapes = {(len(i.required), len(i.optional), i.transactional) for i, _ in corpus}
    a, b = _pair(F.book_flight(), F.book_flight_config().param_universe)
    strong = bisimilar(a, b, "strong")
    checks = {
        f"weak 200/200 (got {ok})": ok == 200,
        "corpus within slot bounds": all(r <= 4 and o <= 3 for r, o, _ in shapes),
        "both transactional values": {t for _, _, t in shapes} == {TriBool.TRUE, TriBool.FALSE},
        "strong mode fails on BookFlight": not strong.equivalent,
    }
    record(2, checks, elapsed, 30.0)


def test_criterion_3_oracle_agreement():
    pairs = lts_pairs(500, seed=0)
    start = time.perf_counter()
    agree = sum(bisimilar(a, b).equivalent == brute_force_bisim(a, b).equivalent for a, b in pairs)
    elapsed = time.perf_counter() - start
    checks = {
        f"500/500 agree (got {agree})": agree == 500,
        "pairs within 8 states": all(a.num_states <= 8 and b.num_states <= 8 for a, b in pairs),
        "each LTS within 4 labels": all(len(x.labels()) <= 4 for pair in pairs for x in pair),
    }
    record(3, checks, elapsed, 60.0)


def test_criterion_4_trace_equivalence(corpus):
    start = time.perf_counter()
    ok = sum(trace_equivalent(*_pair(i, u), max_len=6).equivalent for i, u in corpus)
    left, right = F.separating_pair()
    v = bisimilar(left, right)
    checks = {
        f"200/200 trace equivalent (got {ok})": ok == 200,
        "separating pair trace equivalent": trace_equivalent(left, right, 6).equivalent,
        "separating pair not bisimilar": not v.equivalent,
        "witness separates": replay_witness(left, v.witness) and not replay_witness(right, v.witness),
    }
    record(4, checks, time.perf_counter() - start)


def test_criterion_5_gap_regression():
    c1 = phi_inverse(F.delete_user())
    c2 = phi_inverse(F.app_log_resource())
    c3 = phi_inverse(F.discovery_term())
    plain = round_trip_report(F.create_order_intent(), "plain")
    t1, t2 = F.transfer_funds_pair()
    i1, i2 = phi_inverse(t1).term, phi_inverse(t2).term
    checks = {
        "counterexample 1": isinstance(c1, Mapped)
        and c1.term.transactional is TriBool.UNKNOWN
        and [w.field for w in c1.warnings] == ["transactionality"],
        "counterexample 2": isinstance(c2, UndefinedMapping) and c2.reason == "NoSgdEquivalentResource",
        "counterexample 3": isinstance(c3, UndefinedMapping) and c3.reason == "NoSgdEquivalentInitialize",
        "plain round trip loses only transactionality": plain.details["diff"]
        == {"create_order": {"transactional": ["true", "?"]}},
        "transfer_funds collapse": structural_eq(i1, i2) and not eq(t1, t2),
    }
    record(5, checks)


def test_criterion_6_plus_round_trips():
    intents = annotated_intents(1000, seed=0)
    tools = tool_plus_corpus(1000, seed=0)
    start = time.perf_counter()
    left = sum(phi_plus_inverse(phi_plus(i)) == i for i in intents)
    typed = all(all(v.passed for v in check_tool(t).values()) for t in tools)
    right = sum(phi_plus(phi_plus_inverse(t)) == t for t in tools)
    images = {phi_plus(i) for i in set(intents)}
    elapsed = time.perf_counter() - start
    checks = {
        f"left identity 1000/1000 (got {left})": left == 1000,
        "tools are type correct": typed,
        f"right identity 1000/1000 (got {right})": right == 1000,
        "corpus annotated": all(i.failure_modes for i in intents),
        f"injective ({len(images)} images of {len(set(intents))} inputs)": len(images) == len(set(intents)) == 1000,
    }
    record(6, checks, elapsed, 30.0)


def _missing_field(tool):
    try:
        phi_plus_inverse(tool)
    except MissingMetadata as exc:
        return exc.field
    return None


def test_criterion_7_necessity_matrix():
    tool = tool_plus_corpus(1, seed=3)[0]
    meta = tool.metadata
    assert all(v.passed for v in check_tool(tool).values()) and _missing_field(tool) is None
    cases = {
        "P1": (replace(tool, description=""), "description"),
        "P2": (replace(tool, metadata=replace(meta, side_effects=None)), "side_effects"),
        "P3": (replace(tool, metadata=replace(meta, failure_modes=None)), "failure_modes"),
        "P5": (replace(tool, metadata=replace(meta, dependencies=None)), "dependencies"),
    }
    checks = {f"{p} missing names {field}": _missing_field(t) == field for p, (t, field) in cases.items()}
    no_summary = replace(tool, metadata=replace(meta, summary=None))
    checks["P4 summary removed still inverts"] = eq(phi_plus_inverse(no_summary), phi_plus_inverse(tool))
    checks["P4 summary removed fails typecheck"] = not check_p4(no_summary).passed
    record(7, checks)


def test_criterion_8_principle_anchors():
    checks = {
        "density('departure') == 0.0": semantic_density("departure") == 0.0,
        "density(IATA example) == 0.3": semantic_density(F.IATA_DESCRIPTION) == 0.3,
        "delete_user without approval fails P2": not check_p2(F.delete_user_plus(False)).passed,
        "fetch_user_data passes P3": check_p3(F.fetch_user_data(), F.fetch_user_data_registry()).passed,
        "2-cycle fails P5": not check_p5(F.two_cycle_registry()).passed,
    }
    record(8, checks)


def test_criterion_9_token_budget():
    rep = token_report(token_corpus(50))
    single = token_report(token_corpus(1))
    checks = {
        f"ratio {rep.ratio:.4f} <= 0.19 + 0.01": rep.ratio <= 0.19 + 0.01,
        "flag true": rep.flag,
        "N=1 flag false": not single.flag,
    }
    record(9, checks)


def _labels(lts, printed):
    table = {str(x): x for x in lts.labels()}
    return [table[p] for p in printed]


def test_criterion_10_safety_suite():
    guard = F.tool_write_registry()
    cfg = ExploreConfig(param_universe=F.TOOL_WRITE_CONFIG)
    good = build_lts(guard.as_process(), cfg)
    bad = build_lts(F.tool_write_registry(severed=True).as_process(), cfg)
    bad_rep = check_approval_ordering(bad, guard)
    pair, severed = F.dependent_pair(), F.dependent_pair(severed=True)
    dep_good = build_lts(pair.as_process(), F.plus_config(pair))
    dep_bad = build_lts(severed.as_process(), F.plus_config(severed))
    poisoned = check_inert_descriptions(McpRegistry((F.innocent_search(),)))
    checks = {
        "Tool_write passes": check_approval_ordering(good, guard).passed,
        "severed Tool_write fails replayably": not bad_rep.passed
        and replayable(bad, _labels(bad, bad_rep.witness["trace"])),
        "T_A/T_B passes": check_dependency_ordering(dep_good, pair).passed,
        "severed T_A/T_B fails": not check_dependency_ordering(dep_bad, pair).passed,
        "Tool_confined has no findings": check_confinement(F.tool_confined()) == [],
        "direct leak has one finding": len(check_confinement(F.direct_leak())) == 1,
        "malicious description passes with warning": poisoned.passed and bool(poisoned.warnings),
        "String-in-Code mutant fails": not check_inert_descriptions(None, terms=[F.string_in_code_mutant()]).passed,
    }
    agree = (
        (brute_force_approval(good, guard) is None)
        and (brute_force_approval(bad, guard) is not None)
        and (brute_force_dependency(dep_good, pair) is None)
        and (brute_force_dependency(dep_bad, pair) is not None)
    )
    assert agree, "trace checks disagree with path enumeration"
    record(10, checks)
