"""Verification reports: per-point defects, aggregate maxima, verdicts, JSON output."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone


def config_digest(config) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "tolist"):
        return _clean(v.tolist())
    return v


@dataclass
class PropertyResult:
    name: str
    max_defect: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_defect <= self.tolerance)

    def as_dict(self) -> dict:
        return {"name": self.name, "max_defect": self.max_defect, "tolerance": self.tolerance, "pass": self.passed}


@dataclass
class VerificationReport:
    spec: dict
    grid: dict
    tolerances: dict
    records: list = field(default_factory=list)  # per-point dicts: {"point": [...], name: value, ...}
    extra_properties: list = field(default_factory=list)  # PropertyResults not tied to points
    metadata: dict = field(default_factory=dict)

    def add_point(self, point, **defects) -> None:
        self.records.append({"point": [float(v) for v in point], **{k: float(v) for k, v in defects.items()}})

    def properties(self) -> list[PropertyResult]:
        names: list[str] = []
        for r in self.records:
            names.extend(k for k in r if k != "point" and k not in names)
        out = []
        for name in names:
            vals = [r[name] for r in self.records if name in r]
            out.append(PropertyResult(name, max(vals), self.tolerances[name]))
        return out + list(self.extra_properties)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.properties())

    def failures(self) -> list[str]:
        return [p.name for p in self.properties() if not p.passed]

    def to_dict(self, include_points: bool = False, timestamp: bool = True) -> dict:
        d = {
            "spec": self.spec,
            "grid": self.grid,
            "tolerances": self.tolerances,
            "properties": [p.as_dict() for p in self.properties()],
            "pass": self.passed,
            "metadata": self.metadata,
        }
        if include_points:
            d["points"] = self.records
        if timestamp:
            d["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return _clean(d)

    def to_json(self, include_points: bool = False, timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(include_points, timestamp), indent=2) + "\n"
