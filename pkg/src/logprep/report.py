"""Verification reports: verdicts, per-check rows, witnesses, counterexamples."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

VERIFIED = "verified"
REFUTED = "refuted"
INCONCLUSIVE = "inconclusive"

_ORDER = {VERIFIED: 0, INCONCLUSIVE: 1, REFUTED: 2}


def combine(*verdicts: str) -> str:
    """Worst verdict wins: refuted > inconclusive > verified."""
    worst = VERIFIED
    for v in verdicts:
        if _ORDER[v] > _ORDER[worst]:
            worst = v
    return worst


@dataclass
class Check:
    name: str
    verdict: str
    detail: str = ""
    counterexample: Optional[tuple[float, ...]] = None


@dataclass
class VerificationReport:
    verdict: str = VERIFIED
    checks: list[Check] = field(default_factory=list)
    witnesses: dict[str, Any] = field(default_factory=dict)
    counterexamples: list[tuple[float, ...]] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def add(
        self,
        name: str,
        verdict: str,
        detail: str = "",
        counterexample: Optional[tuple[float, ...]] = None,
    ) -> None:
        self.checks.append(Check(name, verdict, detail, counterexample))
        self.verdict = combine(self.verdict, verdict)
        if counterexample is not None and verdict == REFUTED:
            self.counterexamples.append(tuple(counterexample))

    def absorb(self, name: str, sub: "VerificationReport") -> None:
        """Fold a sub-report in as a single named row plus its witnesses."""
        self.checks.append(Check(name, sub.verdict, f"{len(sub.checks)} checks"))
        self.verdict = combine(self.verdict, sub.verdict)
        for key, value in sub.witnesses.items():
            self.witnesses.setdefault(f"{name}.{key}", value)
        self.counterexamples.extend(sub.counterexamples)
        self.notes.extend(sub.notes)

    @property
    def verified(self) -> bool:
        return self.verdict == VERIFIED


def merge(reports: list[VerificationReport]) -> VerificationReport:
    out = VerificationReport()
    for i, rep in enumerate(reports):
        out.absorb(rep.meta.get("name", f"report{i}"), rep)
    return out


EXIT_CODES = {VERIFIED: 0, REFUTED: 1, INCONCLUSIVE: 3}
EXIT_INVALID = 2
