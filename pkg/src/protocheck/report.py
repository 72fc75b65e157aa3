"""Uniform outcome record for every check."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
EXIT_CODES = {PASS: 0, FAIL: 1, INCONCLUSIVE: 3}


def _fmt(obj):
    """Round floats to 6 decimals so reports are byte-stable."""
    if isinstance(obj, float):
        return round(obj, 6)
    if isinstance(obj, dict):
        return {str(k): _fmt(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fmt(v) for v in obj]
    return obj


@dataclass
class VerificationReport:
    check: str
    passed: bool
    inconclusive: bool = False
    details: dict = field(default_factory=dict)
    findings: list = field(default_factory=list)
    witness: object = None
    warnings: list = field(default_factory=list)
    header: str = ""

    @property
    def status(self) -> str:
        if self.inconclusive:
            return INCONCLUSIVE
        return PASS if self.passed else FAIL

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def __bool__(self) -> bool:
        return self.passed and not self.inconclusive

    def to_json(self) -> dict:
        out = {"check": self.check, "status": self.status, "details": _fmt(self.details)}
        if self.header:
            out["header"] = self.header
        if self.findings:
            out["findings"] = _fmt(self.findings)
        if self.witness is not None:
            out["witness"] = _fmt(self.witness)
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, ensure_ascii=False)

    def to_text(self) -> str:
        lines = [f"{self.check}: {self.status.upper()}"]
        if self.header:
            lines.append(f"  note: {self.header}")
        for k, v in sorted(self.details.items()):
            lines.append(f"  {k}: {json.dumps(_fmt(v), sort_keys=True, ensure_ascii=False)}")
        for f in self.findings:
            lines.append(f"  finding: {json.dumps(_fmt(f), sort_keys=True, ensure_ascii=False)}")
        if self.witness is not None:
            lines.append(f"  witness: {json.dumps(_fmt(self.witness), sort_keys=True, ensure_ascii=False)}")
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        return "\n".join(lines)


def combine(check: str, reports) -> VerificationReport:
    """Aggregate: inconclusive if any part is, else pass iff all pass."""
    reports = list(reports)
    return VerificationReport(
        check,
        passed=all(r.passed for r in reports),
        inconclusive=any(r.inconclusive for r in reports),
        details={r.check: r.to_json() for r in reports},
        warnings=[w for r in reports for w in r.warnings],
    )
