"""Named pass/fail checks with residuals, and their JSON / table rendering."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


def fmt(x: float) -> str:
    """12 significant digits, the package-wide print format."""
    return f"{x:.12g}"


def jsonable(obj: Any) -> Any:
    """Convert numpy values, complex numbers and report objects to plain JSON data.

    Floats are rounded to 12 significant digits so that serialized output is
    stable across runs.
    """
    if hasattr(obj, "to_json"):
        return jsonable(obj.to_json())
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if np.abs(obj.imag).max(initial=0.0) == 0.0:
                obj = obj.real
            else:
                return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
        return jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return float(fmt(x))
    if isinstance(obj, complex):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    return obj


@dataclass
class Check:
    """One verified property.

    ``status`` is derived: ``"pass"`` iff ``residual <= tol``.  ``expected``
    records what a correct implementation should produce, so that negative
    controls (checks that must fail) can sit in the same report.
    """

    name: str
    anchor: str
    residual: float
    tol: float
    witness: Any = None
    expected: str = "pass"

    def __post_init__(self):
        self.residual = float(self.residual)
        if math.isnan(self.residual):
            self.residual = math.inf

    @property
    def status(self) -> str:
        return "pass" if self.residual <= self.tol else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def ok(self) -> bool:
        return self.status == self.expected

    def to_json(self) -> dict:
        d = {
            "check": self.name,
            "anchor": self.anchor,
            "status": self.status,
            "expected": self.expected,
            "residual": jsonable(self.residual),
            "tol": jsonable(self.tol),
        }
        if self.witness is not None:
            d["witness"] = jsonable(self.witness)
        return d


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)
    seed: Any = None
    dims: list = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.checks.extend(other.checks)
        return self

    def __iter__(self):
        return iter(self.checks)

    def __len__(self):
        return len(self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        """Every check passed outright."""
        return all(c.passed for c in self.checks)

    @property
    def ok(self) -> bool:
        """Every check produced its expected status."""
        return all(c.ok for c in self.checks)

    def sorted(self) -> "VerificationReport":
        return VerificationReport(sorted(self.checks, key=lambda c: c.name), self.seed, list(self.dims))

    def to_json_lines(self) -> str:
        return "\n".join(json.dumps(c.to_json(), sort_keys=True) for c in self.checks)

    def table(self) -> str:
        rows = [("check", "status", "expected", "residual", "tol", "anchor")]
        for c in self.checks:
            rows.append((c.name, c.status.upper(), c.expected.upper(), fmt(c.residual), fmt(c.tol), c.anchor))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)
