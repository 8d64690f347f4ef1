"""Run reports and their JSON / CSV serialization.

Reports are deterministic: keys are sorted, floats are written with
``repr`` precision and nothing time dependent is stored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

PASS, FAIL, INCONCLUSIVE, INFO = "pass", "fail", "inconclusive", "info"


@dataclass
class Check:
    name: str
    status: str
    value: Optional[float] = None
    tol: Optional[float] = None
    detail: str = ""

    @classmethod
    def at_most(cls, name: str, value: float, tol: float, detail: str = "") -> "Check":
        value = float(value)
        ok = math.isfinite(value) and value <= tol
        return cls(name, PASS if ok else FAIL, value, tol, detail)

    @classmethod
    def above(cls, name: str, value: float, tol: float, detail: str = "") -> "Check":
        value = float(value)
        ok = math.isfinite(value) and value > tol
        return cls(name, PASS if ok else FAIL, value, tol, detail)

    @classmethod
    def truth(cls, name: str, ok: Optional[bool], detail: str = "") -> "Check":
        if ok is None:
            return cls(name, INCONCLUSIVE, detail=detail)
        return cls(name, PASS if ok else FAIL, detail=detail)

    def as_dict(self) -> dict:
        out = {"name": self.name, "status": self.status, "value": self.value, "tol": self.tol}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class CsvTable:
    header: Sequence[str]
    rows: np.ndarray

    def write(self, path) -> None:
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(self.header) + "\n")
            for row in rows:
                fh.write(",".join(f"{v:.16e}" for v in row) + "\n")


@dataclass
class RunReport:
    experiment: str
    config: dict
    checks: List[Check] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if any(c.status == FAIL for c in self.checks):
            return FAIL
        if any(c.status == PASS for c in self.checks):
            return PASS
        return INCONCLUSIVE if any(c.status == INCONCLUSIVE for c in self.checks) else PASS

    @property
    def exit_code(self) -> int:
        return 1 if self.status == FAIL else 0

    def as_dict(self) -> dict:
        return {
            "schema": 1,
            "experiment": self.experiment,
            "config": self.config,
            "checks": [c.as_dict() for c in self.checks],
            "summary": self.summary,
            "status": self.status,
        }

    def to_json(self) -> str:
        return json.dumps(to_plain(self.as_dict()), indent=2, sort_keys=True) + "\n"

    def lines(self) -> List[str]:
        out = []
        for c in self.checks:
            val = "" if c.value is None else f" value={c.value:.3e}"
            tol = "" if c.tol is None else f" tol={c.tol:.1e}"
            out.append(f"[{c.status.upper():>12}] {self.experiment}: {c.name}{val}{tol}")
        out.append(f"{self.experiment}: {self.status}")
        return out

    def write(self, out_dir, csv: bool = False) -> List[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [out_dir / f"{self.experiment}.json"]
        written[0].write_text(self.to_json(), encoding="utf-8")
        if csv:
            for name, table in sorted(self.tables.items()):
                path = out_dir / f"{self.experiment}{'_' + name if name else ''}.csv"
                table.write(path)
                written.append(path)
        return written


def to_plain(obj):
    """Recursively convert numpy scalars and arrays to JSON-safe Python values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj
