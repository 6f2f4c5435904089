"""Experiment reports: JSON with sorted keys plus optional CSV curves."""

from __future__ import annotations

import csv
import json
import math
import operator
from dataclasses import dataclass, field

import numpy as np

_OPS = {"<=": operator.le, ">=": operator.ge, "<": operator.lt, ">": operator.gt}


@dataclass
class Criterion:
    """One pass/fail check ``value op threshold``."""

    name: str
    value: float
    threshold: float
    op: str
    description: str = ""

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unknown comparison {self.op!r}")
        self.value = float(self.value)
        self.threshold = float(self.threshold)

    @property
    def passed(self) -> bool:
        if math.isnan(self.value) or math.isnan(self.threshold):
            return False
        return bool(_OPS[self.op](self.value, self.threshold))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "op": self.op,
            "passed": self.passed,
            "description": self.description,
        }


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    seed: int
    statistics: dict = field(default_factory=dict)
    criteria: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def add(self, name, value, threshold, op, description="") -> Criterion:
        c = Criterion(name, value, threshold, op, description)
        self.criteria.append(c)
        return c

    @property
    def passed(self) -> bool:
        return bool(self.criteria) and all(c.passed for c in self.criteria) and not self.flags.get(
            "insufficient_sample", False
        )

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "seed": self.seed,
            "statistics": _plain(self.statistics),
            "criteria": [c.to_dict() for c in self.criteria],
            "flags": self.flags,
            "notes": self.notes,
            "passed": self.passed,
            "wall_clock_seconds": self.wall_clock,
            "curves": {k: {"columns": list(v["columns"]), "rows": _plain(v["rows"])} for k, v in self.curves.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def add_curve(self, name: str, columns, rows):
        self.curves[name] = {"columns": list(columns), "rows": np.asarray(rows, dtype=float).tolist()}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def recheck(report: dict) -> bool:
    """Recompute the overall pass flag from the stored criterion numbers."""
    crits = report.get("criteria", [])
    ok = bool(crits)
    for c in crits:
        crit = Criterion(c["name"], c["value"], c["threshold"], c["op"])
        if crit.passed != c["passed"]:
            return False
        ok = ok and crit.passed
    if report.get("flags", {}).get("insufficient_sample", False):
        ok = False
    return ok


def write_report(report: ExperimentReport, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")


def write_curves(report: ExperimentReport, prefix: str) -> list:
    """One CSV per curve, named ``<prefix>_<curve>.csv``; returns the paths."""
    paths = []
    for name, curve in report.curves.items():
        path = f"{prefix}_{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(curve["columns"])
            for row in curve["rows"]:
                w.writerow([repr(float(v)) for v in row])
        paths.append(path)
    return paths


def merge_reports(docs: list) -> dict:
    """Concatenate report documents (each a report or an earlier merge)."""
    reports = []
    for d in docs:
        reports.extend(d["reports"] if "reports" in d else [d])
    return {"reports": reports, "passed": all(r.get("passed", False) for r in reports)}
