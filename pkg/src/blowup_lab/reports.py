"""Small shared report types for the audit operations."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["AuditEntry", "AuditReport"]


@dataclass
class AuditEntry:
    name: str
    passed: bool
    worst_margin: float
    worst_t: float
    detail: str = ""


@dataclass
class AuditReport:
    entries: list[AuditEntry] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(e.passed for e in self.entries)

    def add(self, name, passed, worst_margin, worst_t, detail=""):
        self.entries.append(AuditEntry(name, bool(passed), float(worst_margin),
                                       float(worst_t), detail))

    def __str__(self) -> str:
        lines = []
        for e in self.entries:
            verdict = "pass" if e.passed else "FAIL"
            extra = f" ({e.detail})" if e.detail else ""
            lines.append(
                f"{e.name}: {verdict} (worst margin {e.worst_margin:.3e} "
                f"at t={e.worst_t:.6g}){extra}"
            )
        lines.append(f"overall: {'pass' if self.overall else 'FAIL'}")
        return "\n".join(lines)
