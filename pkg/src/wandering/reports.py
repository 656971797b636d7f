"""Check reports: named pass/fail entries with measured value and tolerance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    passed: bool
    measured: float = 0.0
    tolerance: float = 0.0
    detail: str = ""

    def to_record(self) -> dict:
        measured = self.measured if math.isfinite(self.measured) else -1.0
        return {"name": self.name, "pass": bool(self.passed), "measured": float(measured),
                "tolerance": float(self.tolerance), "detail": self.detail}


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)

    def add(self, name, passed, measured=0.0, tolerance=0.0, detail="") -> Check:
        c = Check(name, bool(passed), float(measured), float(tolerance), detail)
        self.checks.append(c)
        return c

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.measured, c.tolerance, c.detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_records(self) -> list[dict]:
        return [c.to_record() for c in self.checks]
