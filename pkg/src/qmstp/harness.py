"""Multi-replica experiments, reference tables and result aggregation."""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from .descent import DescentStats
from .instance import Instance
from .tps import RunResult, StopCriterion, apply_overrides, default_params, variant_run

__all__ = [
    "PUBLISHED_DISCARD_RATIOS",
    "RunConfig",
    "ExperimentReport",
    "load_reference",
    "run_experiment",
    "format_table",
    "summarize_records",
]

# discarded / total entering edges per benchmark group, as published
PUBLISHED_DISCARD_RATIOS = {
    "CP": 0.896,
    "OP1": 0.742,
    "SCA": 0.934,
    "SS": 0.970,
    "RAND": 0.972,
    "SOAK": 0.971,
    "QAP-QMSTP": 0.628,
}


@dataclass
class RunConfig:
    """One experiment: replica ``k`` runs with seed ``base_seed + k``."""

    profile: str = "general"
    overrides: Mapping[str, str] = field(default_factory=dict)
    stop: StopCriterion = field(default_factory=lambda: StopCriterion.stagnant(10, 50))
    replicas: int = 1
    base_seed: int = 0
    variant: str = "v0"
    workers: int = 1
    move_log: bool = False

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError("replica count must be at least 1")
        if self.workers < 1:
            raise ValueError("worker count must be at least 1")

    def seeds(self) -> list[int]:
        return [self.base_seed + k for k in range(self.replicas)]


@dataclass
class ExperimentReport:
    instance: str
    results: list[RunResult]
    failures: list[dict] = field(default_factory=list)
    reference: int | None = None

    @property
    def values(self) -> list[int]:
        return [r.best_value for r in self.results]

    @property
    def best(self) -> int | None:
        return min(self.values) if self.results else None

    @property
    def average(self) -> float | None:
        return fmean(self.values) if self.results else None

    @property
    def total_time(self) -> float:
        return sum(r.wall_time for r in self.results)

    @property
    def mean_time(self) -> float:
        return self.total_time / len(self.results) if self.results else 0.0

    @property
    def improved(self) -> int:
        """Replicas strictly below the reference value."""
        if self.reference is None:
            return 0
        return sum(v < self.reference for v in self.values)

    @property
    def matched(self) -> int:
        if self.reference is None:
            return 0
        return sum(v == self.reference for v in self.values)

    @property
    def descent(self) -> DescentStats:
        total = DescentStats()
        for r in self.results:
            total.merge(r.descent)
        return total

    def replica_records(self, *, timing: bool = True) -> list[dict]:
        return [dict(type="replica", **r.record(self.instance, timing=timing)) for r in self.results]

    def aggregate_record(self, *, timing: bool = True) -> dict:
        stats = self.descent
        rec = {
            "type": "aggregate",
            "instance": self.instance,
            "replicas": len(self.results),
            "failures": len(self.failures),
            "best": self.best,
            "average": self.average,
            "reference": self.reference,
            "improved": self.improved,
            "matched": self.matched,
            "discards": stats.discarded_edges,
            "total_candidates": stats.n1_candidate_edges,
            "discard_ratio": round(stats.discard_ratio, 6),
        }
        if timing:
            rec["accumulated_time_s"] = round(self.total_time, 6)
            rec["mean_time_s"] = round(self.mean_time, 6)
        return rec

    def records(self, *, timing: bool = True) -> list[dict]:
        fails = [dict(type="failure", instance=self.instance, **f) for f in self.failures]
        return self.replica_records(timing=timing) + fails + [self.aggregate_record(timing=timing)]


def load_reference(source: str | os.PathLike) -> dict[str, int]:
    """Read ``<instance-name> <best-known-value>`` lines; ``#`` starts a comment."""
    table = {}
    for num, line in enumerate(Path(source).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"reference line {num}: expected '<name> <value>'")
        table[parts[0]] = int(parts[1])
    return table


_WORKER_INSTANCE: Instance | None = None


def _init_worker(inst: Instance) -> None:
    global _WORKER_INSTANCE
    _WORKER_INSTANCE = inst


def _replica(inst: Instance, config: RunConfig, seed: int):
    params = apply_overrides(default_params(config.profile, inst.n), config.overrides, inst.n)
    try:
        return variant_run(inst, params, config.stop, seed, config.variant, move_log=config.move_log)
    except Exception as exc:  # noqa: BLE001 - reported per replica, others keep running
        return {"seed": seed, "error": f"{type(exc).__name__}: {exc}"}


def _pooled_replica(config: RunConfig, seed: int):
    return _replica(_WORKER_INSTANCE, config, seed)


def run_experiment(inst: Instance, name: str, config: RunConfig,
                   reference: Mapping[str, int] | None = None) -> ExperimentReport:
    """Run every replica of ``config`` on ``inst``; results come back in seed order."""
    # validate overrides once, before fanning out
    apply_overrides(default_params(config.profile, inst.n), config.overrides, inst.n)
    seeds = config.seeds()
    if config.workers == 1 or len(seeds) == 1:
        outcomes = [_replica(inst, config, s) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(seeds)),
                                 initializer=_init_worker, initargs=(inst,)) as pool:
            outcomes = list(pool.map(_pooled_replica, [config] * len(seeds), seeds))
    results = [o for o in outcomes if isinstance(o, RunResult)]
    failures = [o for o in outcomes if not isinstance(o, RunResult)]
    ref = None if reference is None else reference.get(name)
    return ExperimentReport(name, results, failures, ref)


def format_table(reports: Sequence[ExperimentReport], group: str | None = None) -> str:
    """Plain-text comparison table: Ref, Best, Avg, t(s), improved, matched, discard ratio."""
    head = f"{'Instance':<24}{'Ref':>10}{'Best':>10}{'Avg':>12}{'t(s)':>10}{'impr':>6}{'eq':>5}{'discard':>9}"
    lines = [head, "-" * len(head)]
    for rep in reports:
        ref = "-" if rep.reference is None else str(rep.reference)
        best = "-" if rep.best is None else str(rep.best)
        avg = "-" if rep.average is None else f"{rep.average:.1f}"
        lines.append(
            f"{rep.instance:<24}{ref:>10}{best:>10}{avg:>12}{rep.total_time:>10.2f}"
            f"{rep.improved:>6}{rep.matched:>5}{rep.descent.discard_ratio:>9.1%}"
        )
    if group is not None:
        published = PUBLISHED_DISCARD_RATIOS.get(group.upper())
        if published is not None:
            lines.append(f"{'published ' + group.upper():<24}{'':>63}{published:>9.1%}")
    return "\n".join(lines)


def summarize_records(lines: Iterable[str]) -> list[dict]:
    """Aggregate replica records (one JSON object per line) by instance."""
    by_instance: dict[str, list[dict]] = {}
    for line in lines:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        if rec.get("type", "replica") != "replica":
            continue
        by_instance.setdefault(rec["instance"], []).append(rec)
    out = []
    for name, recs in by_instance.items():
        values = [r["bestF"] for r in recs]
        discards = sum(r["discards"] for r in recs)
        total = sum(r["total_candidates"] for r in recs)
        row = {
            "instance": name,
            "replicas": len(recs),
            "best": min(values),
            "average": fmean(values),
            "worst": max(values),
            "discard_ratio": round(discards / total, 6) if total else 0.0,
        }
        if all("time_ms" in r for r in recs):
            row["accumulated_time_s"] = round(sum(r["time_ms"] for r in recs) / 1000, 6)
        out.append(row)
    return out
