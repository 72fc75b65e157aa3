"""End-to-end replay of the worked examples as a pass/fail matrix."""

from __future__ import annotations

from dataclasses import dataclass

from . import fixtures as F
from . import labels as L
from .corpus import token_corpus
from .equivalence import bisimilar, trace_equivalent
from .manifest import McpRegistry
from .mapping import (
    UndefinedMapping,
    eq,
    phi,
    phi_inverse,
    phi_plus,
    phi_plus_inverse,
    round_trip_report,
    structural_eq,
)
from .security import (
    check_approval_ordering,
    check_confinement,
    check_dependency_ordering,
    check_inert_descriptions,
    replayable,
)
from .semantics import CANCELLED, ExploreConfig, build_lts, traces
from .terms import Intent, TriBool
from .typecheck import check_p2, check_p3, check_p4, check_p5, semantic_density, token_report


@dataclass
class DemoRow:
    area: str
    example: str
    passed: bool
    note: str = ""

    def to_json(self) -> dict:
        return {"area": self.area, "example": self.example, "pass": self.passed, "note": self.note}


def _bookflight():
    cfg = F.book_flight_config()
    lts = build_lts(F.book_flight(), cfg)
    ts = traces(lts, 3)
    ok = any(
        len(t) == 3 and isinstance(t[0], L.Invoke) and isinstance(t[1], L.Execute) and isinstance(t[2], L.Result)
        for t in ts
    )
    errs = [lab for lab in lts.labels() if isinstance(lab, L.Error)]
    missing = len(errs) == 1 and errs[0].error_type == "MissingSlots" and "date" in errs[0].message
    return [
        DemoRow("semantics", "BookFlight invoke, execute, result", ok),
        DemoRow("semantics", "BookFlight without date is MissingSlots", missing, errs[0].message if errs else ""),
    ]


def _github():
    lts = build_lts(F.github_create_issue(), F.github_config())
    kinds = [tuple(type(x).__name__ for x in t) for t in traces(lts, 4)]
    ok = ("Call", "Tau", "Execute", "Result") in kinds
    return [DemoRow("semantics", "create_issue call, validate, execute, result", ok)]


def _phi_image():
    intent = F.book_flight()
    tool = phi(intent)
    cfg = F.book_flight_config()
    a, b = build_lts(intent, cfg), build_lts(tool, cfg)
    weak, strong = bisimilar(a, b, "weak"), bisimilar(a, b, "strong")
    return [
        DemoRow("mapping", "phi(BookFlight) requires origin, destination, date",
                tool.schema.required == ("origin", "destination", "date")),
        DemoRow("equivalence", "BookFlight weakly bisimilar to its image", weak.equivalent),
        DemoRow("equivalence", "strong mode separates them (validation step)", not strong.equivalent),
        DemoRow("equivalence", "BookFlight trace equivalent to its image", trace_equivalent(a, b, 6).equivalent),
    ]


def _gaps():
    m1 = phi_inverse(F.delete_user())
    intent = m1.term if m1.defined else None
    c1 = isinstance(intent, Intent) and intent.transactional is TriBool.UNKNOWN
    c1 = c1 and any(w.field == "transactionality" for w in m1.warnings)
    m2 = phi_inverse(F.app_log_resource())
    m3 = phi_inverse(F.discovery_term())
    plain = round_trip_report(F.create_order_intent(), "plain")
    diff = plain.details["diff"]
    plus = round_trip_report(F.create_order_intent(), "plus")
    t1, t2 = F.transfer_funds_pair()
    i1, i2 = phi_inverse(t1).term, phi_inverse(t2).term
    return [
        DemoRow("mapping", "delete_user maps back with unknown transactionality", c1),
        DemoRow("mapping", "Resource has no SGD counterpart",
                isinstance(m2, UndefinedMapping) and m2.reason == "NoSgdEquivalentResource"),
        DemoRow("mapping", "Initialize and ToolsList have no SGD counterpart",
                isinstance(m3, UndefinedMapping) and m3.reason.startswith("NoSgdEquivalent"), getattr(m3, "reason", "")),
        DemoRow("mapping", "plain round trip of create_order loses only transactionality",
                diff == {"create_order": {"transactional": ["true", "?"]}}, str(diff)),
        DemoRow("mapping", "metadata round trip of create_order is exact", plus.passed),
        DemoRow("mapping", "two transfer_funds tools collapse under the inverse",
                structural_eq(i1, i2) and not eq(t1, t2)),
    ]


def _plus():
    intent = F.book_flight()
    tool = phi_plus(intent)
    meta = tool.metadata
    return [
        DemoRow("mapping", "phi_plus(BookFlight) is a write tool needing approval",
                meta.side_effects == "write" and meta.requires_approval is True),
        DemoRow("mapping", "phi_plus round trip of BookFlight is exact", eq(phi_plus_inverse(tool), intent)),
    ]


def _principles():
    iata = semantic_density(F.IATA_DESCRIPTION)
    p4 = check_p4(F.search_repositories())
    tokens = token_report(token_corpus())
    return [
        DemoRow("typecheck", "density of the IATA description is 0.3", iata == 0.3, f"{iata:g}"),
        DemoRow("typecheck", "density of 'departure' is 0.0", semantic_density("departure") == 0.0),
        DemoRow("typecheck", "delete_user without approval fails P2", not check_p2(F.delete_user_plus(False)).passed),
        DemoRow("typecheck", "fetch_user_data failure modes pass P3",
                check_p3(F.fetch_user_data(), F.fetch_user_data_registry()).passed),
        DemoRow("typecheck", "search_repositories P4 arithmetic is reported",
                "arithmetic" in p4.details, p4.details.get("arithmetic", "")),
        DemoRow("typecheck", "process_payment dependencies pass P5", check_p5(F.payment_registry()).passed),
        DemoRow("typecheck", "a two-tool Requires cycle fails P5", not check_p5(F.two_cycle_registry()).passed),
        DemoRow("typecheck", "50-tool corpus token ratio at most 0.2",
                tokens.flag and tokens.ratio <= 0.2, f"ratio {tokens.ratio:g}"),
    ]


def _security():
    cfg = ExploreConfig(param_universe=F.TOOL_WRITE_CONFIG)
    guard = F.tool_write_registry()
    lts = build_lts(guard.as_process(), cfg)
    cancelled = any(isinstance(x, L.Result) and x.output == CANCELLED for t in traces(lts, 5) for x in t)
    mutant = build_lts(F.tool_write_registry(severed=True).as_process(), cfg)
    bad = check_approval_ordering(mutant, guard)
    pair = F.dependent_pair()
    deps_ok = check_dependency_ordering(build_lts(pair.as_process(), F.plus_config(pair)), pair)
    severed = F.dependent_pair(severed=True)
    deps_bad = check_dependency_ordering(build_lts(severed.as_process(), F.plus_config(severed)), pair)
    lint_bad = check_inert_descriptions(None, terms=[F.string_in_code_mutant()])
    poisoned = check_inert_descriptions(McpRegistry((F.innocent_search(),)))
    return [
        DemoRow("security", "Tool_write passes approval ordering", check_approval_ordering(lts, guard).passed),
        DemoRow("security", "refused approval ends in a cancelled result", cancelled),
        DemoRow("security", "severing the approval guard fails with a replayable trace",
                not bad.passed and _replay(mutant, bad.witness["trace"])),
        DemoRow("security", "T_A/T_B pass dependency ordering", deps_ok.passed),
        DemoRow("security", "dropping the requires edge fails dependency ordering", not deps_bad.passed),
        DemoRow("security", "Tool_confined has no confinement findings", check_confinement(F.tool_confined()) == []),
        DemoRow("security", "a restricted name in a result leaks", len(check_confinement(F.direct_leak())) == 1),
        DemoRow("security", "poisoned description passes the sort check with a warning",
                poisoned.passed and bool(poisoned.warnings)),
        DemoRow("security", "description text in a tool-name position fails", not lint_bad.passed),
    ]


def _replay(lts, printed):
    """Replay a witness given as printed labels."""
    by_text = {str(x): x for x in lts.labels()}
    return all(p in by_text for p in printed) and replayable(lts, [by_text[p] for p in printed])


def _separating():
    a, b = F.separating_pair()
    return [
        DemoRow("equivalence", "a.(b+c) and a.b+a.c are trace equivalent", trace_equivalent(a, b).equivalent),
        DemoRow("equivalence", "a.(b+c) and a.b+a.c are not bisimilar", not bisimilar(a, b).equivalent),
    ]


def _rule_fixtures():
    from .rules import rule_fixtures

    rows = []
    for fx in rule_fixtures():
        rows.append(DemoRow("semantics", f"rule {fx.rule}", fx.holds()))
    return rows


def run_demo() -> list:
    rows = []
    for part in (_bookflight, _github, _rule_fixtures, _phi_image, _separating, _gaps, _plus, _principles, _security):
        try:
            rows += part()
        except Exception as exc:  # a crashing section is reported, not fatal
            rows.append(DemoRow(part.__name__.strip("_"), "section raised", False, f"{type(exc).__name__}: {exc}"))
    return rows


def format_matrix(rows) -> str:
    width = max(len(r.example) for r in rows)
    lines = []
    for r in rows:
        mark = "PASS" if r.passed else "FAIL"
        note = f"  ({r.note})" if r.note else ""
        lines.append(f"{mark}  {r.area:<12} {r.example:<{width}}{note}")
    passed = sum(r.passed for r in rows)
    lines.append(f"{passed}/{len(rows)} examples pass")
    return "\n".join(lines)
