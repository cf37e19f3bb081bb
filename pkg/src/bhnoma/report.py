"""Run reports: the serialized outcome of one scheduler run."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__

FORMAT_VERSION = 1

REPORT_KEYS = {
    "format_version", "tool_version", "scenario_hash", "seed", "scheduler", "reuse_mode",
    "demands", "rates", "objective", "objective_trace", "schedule", "dinkelbach",
    "infeasible_users", "passes",
}
# wall_clock is optional: deterministic outputs leave it out


@dataclass
class RunReport:
    scenario_hash: str
    seed: int
    scheduler: str
    reuse_mode: str
    demands: list
    rates: list
    objective: float
    objective_trace: list
    schedule: list                  # per slot: lit beam ids
    dinkelbach: dict = field(default_factory=dict)
    infeasible_users: list = field(default_factory=list)
    passes: int = 1
    wall_clock: float = 0.0
    format_version: int = FORMAT_VERSION
    tool_version: str = __version__

    @property
    def feasible(self) -> bool:
        return not self.infeasible_users

    def recomputed_objective(self) -> float:
        R = np.asarray(self.rates, dtype=float)
        D = np.asarray(self.demands, dtype=float)
        return float(np.sum((R - D) ** 2))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, with_clock: bool = True) -> str:
        d = self.to_dict()
        if not with_clock:
            d.pop("wall_clock")
        return json.dumps(d, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))


def check_report(data: dict) -> list[str]:
    """Schema problems of a decoded report; empty when valid."""
    problems = []
    missing = REPORT_KEYS - set(data)
    if missing:
        problems.append(f"missing keys: {sorted(missing)}")
        return problems
    if data["format_version"] != FORMAT_VERSION:
        problems.append(f"format_version {data['format_version']} != {FORMAT_VERSION}")
    if len(data["rates"]) != len(data["demands"]):
        problems.append("rates and demands differ in length")
    else:
        R = np.asarray(data["rates"], dtype=float)
        D = np.asarray(data["demands"], dtype=float)
        if float(np.sum((R - D) ** 2)) != data["objective"]:
            problems.append("objective does not match the stored rates and demands")
    trace = data["objective_trace"]
    if any(b > a for a, b in zip(trace, trace[1:])):
        problems.append("objective trace increases")
    return problems
