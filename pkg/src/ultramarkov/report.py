"""Scoped three-way verdicts and their serialisation."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNDETERMINED = "undetermined"


@dataclass
class CheckResult:
    """Outcome of a single check on one scope element.

    ``anchor`` names the identity or criterion being tested, ``subject`` the
    vertex, edge, set or generator it was evaluated on.
    """

    check: str
    anchor: str
    subject: str
    verdict: Verdict
    scope: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict is Verdict.HOLDS

    def to_record(self) -> dict:
        return {
            "check": self.check,
            "anchor": self.anchor,
            "subject": self.subject,
            "scope": {k: _plain(v) for k, v in sorted(self.scope.items())},
            "verdict": self.verdict.value,
            "witnesses": [_plain(w) for w in self.witnesses],
            "detail": self.detail,
        }

    def to_text(self) -> str:
        wit = ", ".join(str(_plain(w)) for w in self.witnesses)
        line = f"[{self.verdict.value.upper():12}] {self.check} {self.subject}"
        if wit:
            line += f"  witnesses: {wit}"
        if self.detail:
            line += f"  ({self.detail})"
        return line


def _plain(value: Any) -> Any:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    return str(value)


def _natural_key(text: str) -> tuple:
    return tuple(int(t) if t.isdigit() else t for t in re.split(r"(\d+)", text))


class Report:
    """An ordered collection of check results."""

    def __init__(self, results: Iterable[CheckResult] = ()):
        self.results: list[CheckResult] = list(results)

    def add(self, result: CheckResult) -> CheckResult:
        self.results.append(result)
        return result

    def extend(self, other: "Report | Iterable[CheckResult]") -> "Report":
        items = other.results if isinstance(other, Report) else other
        self.results.extend(items)
        return self

    def __iter__(self):
        return iter(self.results)

    def __len__(self) -> int:
        return len(self.results)

    def sorted(self) -> "Report":
        return Report(sorted(self.results, key=lambda r: (_natural_key(r.check), _natural_key(r.subject))))

    def by_check(self, check: str) -> list[CheckResult]:
        return [r for r in self.results if r.check == check]

    @property
    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if r.verdict is Verdict.FAILS]

    @property
    def undetermined(self) -> list[CheckResult]:
        return [r for r in self.results if r.verdict is Verdict.UNDETERMINED]

    @property
    def all_hold(self) -> bool:
        return all(r.ok for r in self.results)

    def overall(self) -> Verdict:
        if self.failures:
            return Verdict.FAILS
        if self.undetermined:
            return Verdict.UNDETERMINED
        return Verdict.HOLDS

    def exit_code(self) -> int:
        return {Verdict.HOLDS: 0, Verdict.FAILS: 1, Verdict.UNDETERMINED: 2}[self.overall()]

    def to_records(self) -> str:
        return "".join(json.dumps(r.to_record(), sort_keys=True) + "\n" for r in self.sorted())

    def to_text(self) -> str:
        lines = [r.to_text() for r in self.sorted()]
        counts = {v: sum(r.verdict is v for r in self.results) for v in Verdict}
        lines.append(
            f"summary: {counts[Verdict.HOLDS]} hold, {counts[Verdict.FAILS]} fail, "
            f"{counts[Verdict.UNDETERMINED]} undetermined"
        )
        return "\n".join(lines) + "\n"
