"""Verdict records, the empirical-constant ledger and CSV serialization."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO

CSV_FIELDS = (
    "name", "p", "n", "r", "R", "R0", "lhs", "structural_rhs",
    "empirical_constant", "margin", "verdict",
)


class HypothesisError(ValueError):
    """Requested estimate is not covered by any proved statement for these parameters."""


class MissingDataError(ValueError):
    """A check needs data the trajectory does not carry (e.g. an extinction time)."""


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of one estimate.

    ``margin`` is the normalized slack on the passing side: ``margin >= 0``
    means the inequality holds with the reported constant, and the verdict
    is ``pass`` iff ``margin >= -tolerance`` and the constant is finite.
    """

    name: str
    p: float
    n: int
    lhs: float
    structural_rhs: float
    empirical_constant: float
    margin: float
    r: float = math.nan
    R: float = math.nan
    R0: float = math.nan
    tolerance: float = 0.0
    context: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        if math.isnan(self.margin) or math.isnan(self.empirical_constant):
            return False
        if math.isinf(self.empirical_constant):
            return False
        return self.margin >= -self.tolerance

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def row(self) -> dict:
        return {
            "name": self.name, "p": self.p, "n": self.n, "r": self.r, "R": self.R,
            "R0": self.R0, "lhs": self.lhs, "structural_rhs": self.structural_rhs,
            "empirical_constant": self.empirical_constant, "margin": self.margin,
            "verdict": self.verdict,
        }

    def to_json(self) -> dict:
        out = self.row()
        out["tolerance"] = self.tolerance
        out["context"] = {k: _jsonable(v) for k, v in self.context.items()}
        return out


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if hasattr(v, "item"):
        return _jsonable(v.item())
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return repr(v)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(checks: Iterable[BoundCheck], out: Optional[TextIO] = None) -> str:
    """Serialize checks to CSV; returns the text and also writes it to ``out``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for c in checks:
        row = c.row()
        w.writerow([_fmt(row[k]) for k in CSV_FIELDS])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


@dataclass(frozen=True)
class LedgerEntry:
    value: float
    family: str
    spread: float
    samples: tuple = ()


class ConstantLedger:
    """Empirical constants keyed by estimate name.

    ``value`` is the extremal constant across the family (the one that makes
    the estimate hold for every member) and ``spread`` is max/min of the
    per-member constants.
    """

    def __init__(self):
        self._entries: dict[str, LedgerEntry] = {}

    def record(self, name: str, samples: Iterable[float], family: str = "", extremum: str = "max") -> LedgerEntry:
        vals = tuple(float(s) for s in samples)
        if not vals:
            raise ValueError("no samples")
        finite = [v for v in vals if math.isfinite(v) and v > 0]
        if len(finite) == len(vals):
            spread = max(finite) / min(finite)
        else:
            spread = math.inf
        value = max(vals) if extremum == "max" else min(vals)
        entry = LedgerEntry(value, family, spread, vals)
        self._entries[name] = entry
        return entry

    def set(self, name: str, value: float, family: str = "") -> LedgerEntry:
        return self.record(name, [value], family)

    def get(self, name: str, default: Optional[float] = None) -> Optional[float]:
        e = self._entries.get(name)
        return default if e is None else e.value

    def __getitem__(self, name: str) -> LedgerEntry:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def items(self):
        return sorted(self._entries.items())

    def snapshot(self) -> dict:
        return {
            k: {"value": _jsonable(e.value), "family": e.family, "spread": _jsonable(e.spread),
                "samples": [_jsonable(s) for s in e.samples]}
            for k, e in self.items()
        }
