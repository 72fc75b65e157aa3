"""Transition labels shared by the SGD and MCP transition systems."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

from .terms import Literal, Var, as_params


def show_literal(value: Literal) -> str:
    if isinstance(value, Var):
        return str(value)
    return json.dumps(value, ensure_ascii=False)


def show_params(params) -> str:
    return "{" + ", ".join(f"{k}: {show_literal(v)}" for k, v in params) + "}"


@dataclass(frozen=True)
class Invoke:
    name: str
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", as_params(self.params))

    def __str__(self):
        return f"invoke({self.name}, {show_params(self.params)})"


@dataclass(frozen=True)
class Collect:
    slot: str
    value: Literal

    def __str__(self):
        return f"collect({self.slot}, {show_literal(self.value)})"


@dataclass(frozen=True)
class Call:
    name: str
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", as_params(self.params))

    def __str__(self):
        return f"call({self.name}, {show_params(self.params)})"


TAU_REASONS = ("validate", "negotiate", "collect")


@dataclass(frozen=True)
class Tau:
    reason: str = "validate"

    def __post_init__(self):
        if self.reason not in TAU_REASONS:
            raise ValueError(f"unknown tau reason {self.reason!r}")

    def __str__(self):
        return f"tau[{self.reason}]"


@dataclass(frozen=True)
class Approval:
    tool: str
    confirm: bool

    def __str__(self):
        return f"approval({self.tool}, {str(self.confirm).lower()})"


@dataclass(frozen=True)
class Requires:
    token: str

    def __str__(self):
        return f"requires({self.token})"


@dataclass(frozen=True)
class Execute:
    name: str

    def __str__(self):
        return f"execute({self.name})"


@dataclass(frozen=True)
class Result:
    output: Literal

    def __str__(self):
        return f"result({show_literal(self.output)})"


@dataclass(frozen=True)
class Error:
    error_type: str
    message: str = ""

    def __str__(self):
        return f"error({self.error_type}, {json.dumps(str(self.message), ensure_ascii=False)})"


@dataclass(frozen=True)
class Read:
    uri: str

    def __str__(self):
        return f"read({self.uri})"


@dataclass(frozen=True)
class List:
    filter: str = ""

    def __str__(self):
        return f"list({json.dumps(self.filter)})"


@dataclass(frozen=True)
class Detail:
    name: str

    def __str__(self):
        return f"detail({self.name})"


TransitionLabel = Union[
    Invoke, Collect, Call, Tau, Approval, Requires, Execute, Result, Error, Read, List, Detail
]

SGD_LABELS = (Invoke, Collect, Execute, Result, Error)
MCP_LABELS = (Call, Tau, Execute, Result, Error, Read, List)
MCP_PLUS_LABELS = MCP_LABELS + (Approval, Requires, Detail)
