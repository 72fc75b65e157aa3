"""One hand-derived unit fixture per transition rule of each calculus.

Each expected successor list is written out literally; only congruence
(canonical ordering of parallel components) is applied before comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import fixtures as F
from . import labels as L
from .codec import label_key, term_key
from .congruence import canonicalize
from .semantics import ExploreConfig, step, table_oracle
from .terms import (
    CollectSlot,
    ErrorT,
    ExecuteS,
    Initialize,
    Par,
    Restrict,
    ResultT,
    ToolCall,
    ToolsList,
    Validate,
    Var,
    as_params,
)

FULL, NO_DATE = F.BOOKFLIGHT_FULL, F.BOOKFLIGHT_NO_DATE
FILLED = {**FULL, "class": "economy"}
PARTIAL = {"owner": "anthropic"}


@dataclass
class RuleFixture:
    rule: str
    term: object
    config: ExploreConfig
    expected: list

    def successors(self) -> list:
        return step(self.term, self.config)

    def expected_successors(self) -> list:
        pairs = [(lab, canonicalize(t)) for lab, t in self.expected]
        return sorted(pairs, key=lambda p: (label_key(p[0]), term_key(p[1])))

    def holds(self) -> bool:
        return self.successors() == self.expected_successors()


def _oracle():
    table = {
        ("BookFlight", as_params(FULL)): "ABC123",
        ("BookFlight", as_params(FILLED)): "ABC124",
        ("cancel_trip", as_params({"trip": "T1"})): "cancelled-T1",
        ("create_issue", as_params(F.GITHUB_CALL)): "issue 42",
    }
    return table_oracle(table)


def _cfg(universe=None, **kw) -> ExploreConfig:
    return ExploreConfig(param_universe=universe or {}, effect_oracle=_oracle(), **kw)


def sgd_rule_fixtures() -> list:
    intent = F.book_flight()
    cancel = ExecuteS("cancel_trip", {"trip": "T1"}, False)
    return [
        RuleFixture(
            "SGD-INVOK-OK", intent, _cfg({"BookFlight": [FULL]}),
            [(L.Invoke("BookFlight", FULL), ExecuteS("BookFlight", FULL, True))],
        ),
        RuleFixture(
            "SGD-INVOK-ERR", intent, _cfg({"BookFlight": [NO_DATE]}),
            [(L.Invoke("BookFlight", NO_DATE), ErrorT("MissingSlots", "missing: date"))],
        ),
        RuleFixture(
            "SGD-COLLECT",
            CollectSlot("class", "economy", ExecuteS("BookFlight", {**FULL, "class": Var("class")}, True)),
            _cfg(),
            [(L.Collect("class", "economy"), ExecuteS("BookFlight", FILLED, True))],
        ),
        RuleFixture(
            "SGD-EXECUTE-TX", ExecuteS("BookFlight", FULL, True), _cfg(),
            [(L.Execute("BookFlight"), ResultT("ABC123"))],
        ),
        RuleFixture("SGD-EXECUTE", cancel, _cfg(), [(L.Execute("cancel_trip"), ResultT("cancelled-T1"))]),
        RuleFixture(
            "SGD-PAR", Par(ExecuteS("BookFlight", FULL, True), cancel), _cfg(),
            [
                (L.Execute("BookFlight"), Par(ResultT("ABC123"), cancel)),
                (L.Execute("cancel_trip"), Par(ExecuteS("BookFlight", FULL, True), ResultT("cancelled-T1"))),
            ],
        ),
        RuleFixture(
            "SGD-RES", Restrict("k", Par(cancel, ResultT("done"))), _cfg(),
            [
                (L.Execute("cancel_trip"), Restrict("k", Par(ResultT("cancelled-T1"), ResultT("done")))),
                (L.Result("done"), Restrict("k", cancel)),
            ],
        ),
    ]


def mcp_rule_fixtures() -> list:
    issue = F.github_create_issue()
    schema = issue.schema
    return [
        RuleFixture(
            "MCP-INIT", Initialize(("tools", "sampling")),
            _cfg(server_tools=(issue,), server_caps=("tools", "logging")),
            [(L.Tau("negotiate"), ToolsList((issue,), ("tools",)))],
        ),
        RuleFixture(
            "MCP-DISCOVER", ToolsList((issue, F.delete_user())), _cfg(list_filters=("issue", "")),
            [(L.List("issue"), issue), (L.List(""), Par(issue, F.delete_user()))],
        ),
        RuleFixture(
            "MCP-CALL", issue, _cfg({"create_issue": [F.GITHUB_CALL]}),
            [(L.Call("create_issue", F.GITHUB_CALL), Validate("create_issue", F.GITHUB_CALL, schema))],
        ),
        RuleFixture(
            "MCP-VALIDATE-OK", Validate("create_issue", F.GITHUB_CALL, schema), _cfg(),
            [(L.Tau("validate"), ToolCall("create_issue", F.GITHUB_CALL))],
        ),
        RuleFixture(
            "MCP-VALIDATE-ERR", Validate("create_issue", PARTIAL, schema), _cfg(),
            [(L.Tau("validate"), ErrorT("ValidationError", "missing: repo,title"))],
        ),
        RuleFixture(
            "MCP-EXECUTE", ToolCall("create_issue", F.GITHUB_CALL), _cfg(),
            [(L.Execute("create_issue"), ResultT("issue 42"))],
        ),
        RuleFixture(
            "MCP-RESOURCE", F.app_log_resource(), _cfg(),
            [(L.Read("file:///var/log/app.log"), ResultT("2026-02-20 10:00:00 ERROR Connection timeout..."))],
        ),
    ]


def rule_fixtures() -> list:
    return sgd_rule_fixtures() + mcp_rule_fixtures()
