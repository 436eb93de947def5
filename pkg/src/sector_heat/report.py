"""Verification report record and its key-value serialization."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one numerical check.

    ``violation`` is signed: positive means the inequality (or identity)
    is broken by that amount. ``passed`` is derived, never set by hand.
    """

    name: str
    violation: float
    tol: float
    fingerprint: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.violation <= self.tol) and not math.isnan(self.violation)

    def to_text(self) -> str:
        lines = [f"[{self.name}]",
                 f"violation = {self.violation:.17g}",
                 f"tolerance = {self.tol:.17g}",
                 f"passed = {'true' if self.passed else 'false'}",
                 f"fingerprint = {self.fingerprint}"]
        for key in sorted(self.details):
            val = self.details[key]
            if isinstance(val, float):
                val = f"{val:.17g}"
            elif isinstance(val, (list, tuple)):
                val = ", ".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in val)
            lines.append(f"{key} = {val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "VerificationReport":
        name, kv = None, {}
        for line in text.strip().splitlines():
            line = line.strip()
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1]
            elif "=" in line:
                k, v = line.split("=", 1)
                kv[k.strip()] = v.strip()
        details = {k: v for k, v in kv.items()
                   if k not in ("violation", "tolerance", "passed", "fingerprint")}
        return cls(name, float(kv["violation"]), float(kv["tolerance"]), kv.get("fingerprint", ""), details)


def fingerprint(*parts) -> str:
    """Short stable hash of the repr of the given objects."""
    h = hashlib.sha256("|".join(repr(p) for p in parts).encode()).hexdigest()
    return h[:16]
