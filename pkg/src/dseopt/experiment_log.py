"""Append-only experiment records with line-delimited persistence.

A log is one header object (the fully resolved run configuration) followed
by one record per evaluation, serialized as JSON lines. Both optimizer
engines emit the same record shape so their logs are directly comparable.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class IterationRecord:
    """One evaluation: proposal, outcome, bookkeeping, timing."""

    index: int
    phase: str  # "init" | "search" | "generation"
    raw_params: dict
    status: str
    reason: str | None = None
    metrics: dict | None = None
    objective_value: float | None = None
    incumbent: float | None = None
    acquisition: dict | None = None  # kind/kappa/zeta/value at the proposal
    gp_params: dict | None = None  # hyperparameters used for the proposal
    generation: int | None = None
    duplicate: bool = False
    timing: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        return cls(**{k: d.get(k) for k in cls.__dataclass_fields__ if k in d})


@dataclass
class ExperimentLog:
    """Header plus the ordered evaluation records of one run."""

    header: dict = field(default_factory=dict)
    records: list[IterationRecord] = field(default_factory=list)

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    def ok_records(self) -> list[IterationRecord]:
        return [r for r in self.records if r.status == "ok"]

    def best_record(self) -> IterationRecord | None:
        ok = [r for r in self.ok_records() if r.objective_value is not None]
        return min(ok, key=lambda r: r.objective_value) if ok else None

    def save(self, path) -> None:
        path = Path(path)
        with open(path, "w") as fh:
            fh.write(json.dumps({"type": "header", **self.header}) + "\n")
            for rec in self.records:
                fh.write(json.dumps({"type": "record", **rec.to_dict()}) + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentLog":
        """Parse a .jsonl log; corrupt lines are reported by line number."""
        log = cls()
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"line {lineno}: invalid record ({exc.msg})") from None
                kind = obj.pop("type", None)
                if kind == "header":
                    log.header = obj
                elif kind == "record":
                    log.append(IterationRecord.from_dict(obj))
                else:
                    raise ValueError(f"line {lineno}: unknown record type {kind!r}")
        return log
