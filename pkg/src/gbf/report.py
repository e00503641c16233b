"""Check records and JSON-serializable reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .config import settings

PASS = "pass"
FAIL = "fail"
ILL_DEFINED = "ill-defined"
INFO = "info"
_SEVERITY = [INFO, PASS, ILL_DEFINED, FAIL]


def _clean(value: Any) -> Any:
    """Make values JSON-safe and deterministic."""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return value if math.isfinite(value) else str(value)
    if isinstance(value, complex):
        return [_clean(value.real), _clean(value.imag)]
    if hasattr(value, "item") and getattr(value, "shape", None) == ():
        return _clean(value.item())
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "tolist"):
        return _clean(value.tolist())
    return str(value)


@dataclass
class Check:
    """One verified statement.

    ``axiom`` names the law being tested (for example ``"C5"`` or ``"T3x"``).
    """

    name: str
    axiom: str
    residual: float
    verdict: str
    detail: dict = field(default_factory=dict)

    @classmethod
    def from_residual(cls, name: str, axiom: str, residual: float, tol: float | None = None,
                      **detail) -> "Check":
        tol = settings.tol if tol is None else tol
        residual = float(residual)
        verdict = PASS if residual <= tol else FAIL
        return cls(name, axiom, residual, verdict, dict(detail))

    @property
    def ok(self) -> bool:
        return self.verdict in (PASS, INFO)

    def to_dict(self) -> dict:
        out = {"name": self.name, "axiom": self.axiom, "residual": _clean(self.residual),
               "verdict": self.verdict}
        if self.detail:
            out["detail"] = _clean(self.detail)
        return out


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "Report") -> "Report":
        self.checks.extend(other.checks)
        return self

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def ill_defined(self) -> bool:
        return any(c.verdict == ILL_DEFINED for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.verdict == FAIL]

    def max_residual(self, axiom: str | None = None) -> float:
        vals = [c.residual for c in self.checks if axiom is None or c.axiom == axiom]
        return max(vals, default=0.0)

    def exit_code(self) -> int:
        """0 all pass, 1 some failure, 2 ill-defined without failure."""
        if self.failures:
            return 1
        if self.ill_defined:
            return 2
        return 0

    def summary(self) -> dict:
        per_axiom: dict[str, dict] = {}
        for c in self.checks:
            entry = per_axiom.setdefault(c.axiom, {"checks": 0, "max_residual": 0.0, "verdict": INFO})
            entry["checks"] += 1
            if math.isfinite(c.residual):
                entry["max_residual"] = max(entry["max_residual"], c.residual)
            else:
                entry["max_residual"] = c.residual
            entry["verdict"] = max(entry["verdict"], c.verdict, key=_SEVERITY.index)
        return per_axiom

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "exit_code": self.exit_code(),
            "summary": _clean(self.summary()),
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
