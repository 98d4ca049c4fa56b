"""Structured check reports.

A :class:`CheckReport` collects named residuals, each either compared to a
fixed tolerance, judged as a convergence trend, or carried along as
information only. Reports serialize to a line-oriented JSON object so that
two runs with the same configuration produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from . import __version__

TREND = "trend"
INFO = "informational"


@dataclass
class ResidualRow:
    label: str
    value: float
    tolerance: float | str | None = None
    passed: bool | str = INFO

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "value": _jsonable(self.value),
            "tolerance": _jsonable(self.tolerance),
            "pass": self.passed,
        }


def strictly_decreasing(values) -> bool:
    vals = list(values)
    return len(vals) >= 2 and all(b < a for a, b in zip(vals, vals[1:]))


@dataclass
class CheckReport:
    """Result of one verification routine.

    ``convergence`` maps a table label to ``[(resolution, residual), ...]``.
    """

    name: str
    params_echo: dict[str, Any] = field(default_factory=dict)
    residual_table: list[ResidualRow] = field(default_factory=list)
    convergence: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    timestamp: str | None = None
    artifact_version: str = __version__

    def check(self, label: str, value: float, tolerance: float) -> bool:
        """Add a toleranced row; passes iff ``value <= tolerance``."""
        value = float(value)
        ok = bool(value <= tolerance)
        self.residual_table.append(ResidualRow(label, value, float(tolerance), ok))
        return ok

    def check_greater(self, label: str, value: float, bound: float) -> bool:
        """Add a lower-bound row; passes iff ``value > bound``."""
        value = float(value)
        ok = bool(value > bound)
        self.residual_table.append(ResidualRow(label, value, f"> {bound:g}", ok))
        return ok

    def info(self, label: str, value) -> None:
        self.residual_table.append(ResidualRow(label, value, None, INFO))

    def trend(self, label: str, rows, criterion=strictly_decreasing) -> bool:
        """Record a convergence table and a trend row judged by ``criterion``."""
        rows = [(float(r), float(v)) for r, v in rows]
        self.convergence[label] = rows
        ok = bool(criterion([v for _, v in rows]))
        last = rows[-1][1] if rows else math.nan
        self.residual_table.append(ResidualRow(label, last, TREND, ok))
        return ok

    @property
    def passed(self) -> bool:
        """True iff every toleranced row passes (trend rows excluded)."""
        return all(
            r.passed for r in self.residual_table if r.tolerance not in (None, TREND)
        )

    @property
    def trends_passed(self) -> bool:
        return all(r.passed for r in self.residual_table if r.tolerance == TREND)

    def row(self, label: str) -> ResidualRow:
        for r in self.residual_table:
            if r.label == label:
                return r
        raise KeyError(label)

    def value(self, label: str) -> float:
        return self.row(label).value

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "artifact_version": self.artifact_version,
            "timestamp": self.timestamp,
            "params": {k: _jsonable(v) for k, v in self.params_echo.items()},
            "residuals": [r.to_dict() for r in self.residual_table],
            "convergence": {
                k: [[_jsonable(a), _jsonable(b)] for a, b in v]
                for k, v in self.convergence.items()
            },
            "notes": list(self.notes),
            "pass": self.passed,
            "trends_pass": self.trends_passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        rows = [
            ResidualRow(r["label"], _unjson(r["value"]), _unjson(r["tolerance"]), r["pass"])
            for r in d["residuals"]
        ]
        conv = {
            k: [(_unjson(a), _unjson(b)) for a, b in v] for k, v in d["convergence"].items()
        }
        return cls(
            name=d["name"],
            params_echo={k: _unjson(v) for k, v in d["params"].items()},
            residual_table=rows,
            convergence=conv,
            notes=list(d.get("notes", [])),
            timestamp=d.get("timestamp"),
            artifact_version=d.get("artifact_version", __version__),
        )

    @classmethod
    def from_json(cls, text: str) -> "CheckReport":
        return cls.from_dict(json.loads(text))

    def summary_lines(self) -> list[str]:
        lines = [f"== {self.name}"]
        for r in self.residual_table:
            tol = "" if r.tolerance is None else f" (tol {r.tolerance})"
            flag = {True: "PASS", False: "FAIL"}.get(r.passed, "info")
            lines.append(f"  [{flag}] {r.label}: {_fmt(r.value)}{tol}")
        return lines


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6e}"
    if isinstance(v, complex):
        return f"{v.real:.6e}{v.imag:+.6e}j"
    return str(v)


# floats are written with repr() precision; non-finite and complex values
# are tagged so the round trip is lossless.
def _jsonable(v):
    if isinstance(v, complex):
        return {"re": _jsonable(v.real), "im": _jsonable(v.imag)}
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(v, "item") and not isinstance(v, (list, tuple, dict)):
        return _jsonable(v.item())
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def _unjson(v):
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return complex(_unjson(v["re"]), _unjson(v["im"]))
    if v in ("nan", "inf", "-inf"):
        return float(v)
    if isinstance(v, list):
        return [_unjson(x) for x in v]
    return v
