from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

PASS = "pass"
FAIL = "fail"
VACUOUS = "vacuous"
INCONCLUSIVE = "inconclusive"


@dataclass
class Verdict:
    """Outcome of a probe-based checker.

    ``method`` documents how the verdict was reached (probe grid, surrogate
    used); probe-based passes are evidence, never proofs.
    """

    status: str
    method: str
    detail: str = ""
    witness: Any = None
    worst: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status in (PASS, VACUOUS)

    def __bool__(self) -> bool:
        return self.passed
