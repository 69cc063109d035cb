"""Check records and the JSON-serializable analysis report."""

from __future__ import annotations

import json

import numpy as np

from dataclasses import asdict, dataclass, field
from typing import Any

from .dist import CHECK_TOL, holds_leq


@dataclass(frozen=True)
class CheckRecord:
    """One verified inequality: lhs <= rhs with its slack.

    `statement` spells out the inequality being checked so a failing report
    is self-documenting.  `holds` may be None for not-applicable checks.
    """

    name: str
    statement: str
    lhs: float
    rhs: float
    holds: bool | None

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @classmethod
    def leq(cls, name: str, statement: str, lhs: float, rhs: float, tol: float = CHECK_TOL) -> "CheckRecord":
        return cls(name, statement, lhs, rhs, holds_leq(lhs, rhs, tol))

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["slack"] = self.slack
        return d


@dataclass
class AnalysisReport:
    """Everything the analyze command computed, plus per-check verdicts."""

    scalars: dict[str, float | int | None] = field(default_factory=dict)
    checks: list[CheckRecord] = field(default_factory=list)

    def add(self, record: CheckRecord) -> None:
        self.checks.append(record)

    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks if c.holds is not None)

    def as_dict(self) -> dict[str, Any]:
        return {
            "scalars": dict(sorted(self.scalars.items())),
            "checks": [c.as_dict() for c in self.checks],
            "all_hold": self.all_hold(),
        }

    def to_json(self) -> str:
        return json.dumps(_round_floats(self.as_dict()), indent=2, sort_keys=True)


def _round_floats(obj: Any) -> Any:
    """Emit floats with 12 significant digits for a platform-stable report."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj
