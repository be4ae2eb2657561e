"""Structured pass/fail outcomes shared by checkers and studies."""
from __future__ import annotations

from dataclasses import dataclass

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"
INAPPLICABLE = "inapplicable"
EXPLORATORY = "exploratory"

STATUSES = (PASS, FAIL, INCONCLUSIVE, INAPPLICABLE, EXPLORATORY)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a deterministic check.

    ``check`` names the first violated condition (``None`` on pass) and
    ``worst`` carries the offending magnitude when one exists.
    """

    status: str
    check: str | None = None
    message: str = ""
    worst: float | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown verdict status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {"status": self.status, "check": self.check, "message": self.message,
                "worst": self.worst}
