"""Check records and reports shared by every verification routine."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


def scale_of(*values) -> float:
    """Geometric mean of the magnitudes involved in a comparison, floored at 1."""
    mags = [abs(complex(v)) for v in values]
    mags = [m for m in mags if m > 0.0]
    if not mags:
        return 1.0
    return max(1.0, math.exp(sum(math.log(m) for m in mags) / len(mags)))


def rel_err(a, b) -> float:
    return abs(complex(a) - complex(b)) / scale_of(a, b)


@dataclass
class CheckRecord:
    name: str
    anchor: str
    max_abs_err: float
    max_rel_err: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


class Tally:
    """Accumulates the worst error of one named identity over many evaluations."""

    def __init__(self, name, anchor, tolerance):
        self.name = name
        self.anchor = anchor
        self.tolerance = tolerance
        self.max_abs = 0.0
        self.max_rel = 0.0
        self.count = 0
        self.forced_fail = ""
        self.detail = ""

    def add(self, lhs, rhs):
        lhs, rhs = complex(lhs), complex(rhs)
        err = abs(lhs - rhs)
        rel = err / scale_of(lhs, rhs)
        if not np.isfinite(err):
            err = rel = math.inf
        self.max_abs = max(self.max_abs, err)
        self.max_rel = max(self.max_rel, rel)
        self.count += 1
        return rel

    def add_error(self, abs_err, rel):
        self.max_abs = max(self.max_abs, float(abs_err))
        self.max_rel = max(self.max_rel, float(rel))
        self.count += 1

    def fail(self, why):
        self.forced_fail = why

    def record(self) -> CheckRecord:
        ok = (not self.forced_fail) and self.count > 0 and self.max_rel <= self.tolerance
        detail = self.forced_fail or self.detail or f"{self.count} evaluations"
        return CheckRecord(self.name, self.anchor, self.max_abs, self.max_rel,
                           self.tolerance, ok, detail)


@dataclass
class Report:
    command: str
    records: list[CheckRecord] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def extend(self, records):
        self.records.extend(records)
        return self

    def failures(self):
        return [r for r in self.records if not r.passed]

    def __getitem__(self, name) -> CheckRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def summary_lines(self):
        for r in self.records:
            flag = "PASS" if r.passed else "FAIL"
            yield f"{flag} {r.name}: rel={r.max_rel_err:.3e} tol={r.tolerance:.1e} ({r.detail})"
