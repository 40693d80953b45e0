"""Run reports: structured JSON plus flat delimited tables.

The JSON report is the machine format (config echo, one record per check,
summary counts, convergence tables).  The flat tables are plot-ready:
records.csv (all numeric fields), gaps.csv (check, gap), convergence.csv
(check, level, value, residual, ratio).  Per-record wall time lives only
in the JSON and is excluded from the byte-identical determinism contract;
every other numeric field is reproducible bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

TOOL_VERSION = "0.1.0"


@dataclass
class CheckRecord:
    suite: str
    name: str
    inputs_digest: str
    lhs: float
    rhs: float
    gap: float
    relative_gap: float
    tolerance: float
    passed: bool
    wall_time_s: float = 0.0
    kind: str = "check"  # "check" or "diagnostic" (excluded from tallies)

    def row(self):
        return [self.suite, self.name, self.inputs_digest, repr(self.lhs),
                repr(self.rhs), repr(self.gap), repr(self.relative_gap),
                repr(self.tolerance), str(self.passed), self.kind]


@dataclass
class RunReport:
    config_echo: dict
    records: list = field(default_factory=list)
    convergence: dict = field(default_factory=dict)

    @property
    def summary(self) -> dict:
        checks = [r for r in self.records if r.kind == "check"]
        diags = [r for r in self.records if r.kind != "check"]
        return {
            "total": len(checks),
            "passed": sum(1 for r in checks if r.passed),
            "failed": sum(1 for r in checks if not r.passed),
            "diagnostics": len(diags),
        }

    @property
    def all_passed(self) -> bool:
        return self.summary["failed"] == 0

    def to_json(self, include_wall_time: bool = True) -> str:
        records = []
        for r in sorted(self.records, key=lambda r: (r.suite, r.name)):
            item = {
                "suite": r.suite, "name": r.name, "inputs_digest": r.inputs_digest,
                "lhs": r.lhs, "rhs": r.rhs, "gap": r.gap,
                "relative_gap": r.relative_gap, "tolerance": r.tolerance,
                "passed": r.passed, "kind": r.kind,
            }
            if include_wall_time:
                item["wall_time_s"] = r.wall_time_s
            records.append(item)
        payload = {
            "tool": {"name": "capaf", "version": TOOL_VERSION},
            "config": self.config_echo,
            "records": records,
            "summary": self.summary,
            "convergence": {k: v for k, v in sorted(self.convergence.items())},
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def digest(obj) -> str:
    """Short deterministic digest of check inputs."""
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def emit_report(report: RunReport, out_dir: str) -> dict:
    """Write report.json plus flat tables; returns the path map."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    paths["json"] = os.path.join(out_dir, "report.json")
    with open(paths["json"], "w", encoding="utf-8") as fh:
        fh.write(report.to_json())

    paths["records"] = os.path.join(out_dir, "records.csv")
    with open(paths["records"], "w", encoding="utf-8") as fh:
        fh.write("suite,name,inputs_digest,lhs,rhs,gap,relative_gap,tolerance,passed,kind\n")
        for r in sorted(report.records, key=lambda r: (r.suite, r.name)):
            fh.write(",".join(r.row()) + "\n")

    paths["gaps"] = os.path.join(out_dir, "gaps.csv")
    with open(paths["gaps"], "w", encoding="utf-8") as fh:
        fh.write("check,gap\n")
        for r in sorted(report.records, key=lambda r: (r.suite, r.name)):
            fh.write(f"{r.suite}.{r.name},{r.gap!r}\n")

    paths["convergence"] = os.path.join(out_dir, "convergence.csv")
    with open(paths["convergence"], "w", encoding="utf-8") as fh:
        fh.write("check,level,value,residual,ratio\n")
        for name, rows in sorted(report.convergence.items()):
            for row in rows:
                level, value, residual, ratio = row
                fh.write(f"{name},{level},{value!r},{residual!r},{ratio!r}\n")
    return paths
