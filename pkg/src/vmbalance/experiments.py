"""Comparison sweeps: workloads x algorithms x repetitions, merged into CSV reports."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import InvalidConfig, VmBalanceError
from .metrics import CSV_COLUMNS, DEFAULT_SERIES_STEP, imbalance_series, report
from .schedulers import USES_K, SchedulerConfig, run_algorithm
from .workload import SyntheticParams, generate_synthetic, load_instance

RUN_COLUMNS = ("workload", "repetition", "seed") + CSV_COLUMNS
SUMMARY_COLUMNS = ("workload", "runs") + CSV_COLUMNS
NUMERIC = ("avg_utilization", "imd", "makespan_slots", "cm_max", "partitions", "wall_time_ms")


def k_or_f(cfg: SchedulerConfig) -> str:
    if cfg.algorithm in USES_K:
        return str(cfg.k)
    if cfg.algorithm == "PrepartitionOn2":
        return str(cfg.f)
    if cfg.algorithm == "PMG":
        return str(cfg.pmg_factor)
    return ""


def label(cfg: SchedulerConfig) -> str:
    tag = k_or_f(cfg)
    return f"{cfg.algorithm}-{tag.replace('/', '_')}" if tag else cfg.algorithm


@dataclass
class ExperimentSpec:
    workloads: list  # {"path": ...} or {"synthetic": {...}}
    algorithms: list  # of SchedulerConfig
    repetitions: int = 10
    outputs: str = "."
    series_step_slots: int = DEFAULT_SERIES_STEP
    workers: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.repetitions < 1:
            raise InvalidConfig("repetitions must be >= 1")
        if self.series_step_slots < 1:
            raise InvalidConfig("series_step_slots must be >= 1")
        if not self.workloads or not self.algorithms:
            raise InvalidConfig("need at least one workload and one algorithm")
        for w in self.workloads:
            if not isinstance(w, dict) or len(set(w) & {"path", "synthetic"}) != 1:
                raise InvalidConfig(f"workload needs exactly one of path/synthetic: {w!r}")

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentSpec":
        doc = dict(doc)
        doc["algorithms"] = [a if isinstance(a, SchedulerConfig) else SchedulerConfig.from_json(a)
                             for a in doc.get("algorithms", [])]
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        return cls.from_json(json.loads(Path(path).read_text()))


def workload_name(w: dict, index: int) -> str:
    if "path" in w:
        return Path(w["path"]).stem
    p = w["synthetic"]
    return w.get("name") or f"synthetic-n{p['n_vms']}-s{p.get('seed', 0)}"


def _build(w: dict, rep: int):
    """Instance for repetition ``rep``: synthetic workloads draw a fresh seed."""
    if "path" in w:
        return load_instance(w["path"]), 0
    params = SyntheticParams.from_json(w["synthetic"])
    params = replace(params, seed=params.seed + rep)
    return generate_synthetic(params), params.seed


@dataclass
class RunResult:
    workload: str
    repetition: int
    seed: int
    cfg: SchedulerConfig
    row: Optional[list] = None
    series: list = field(default_factory=list)
    error: Optional[str] = None


def _execute(task):
    index, w, rep, cfg, step, timing = task
    name = workload_name(w, index)
    try:
        inst, seed = _build(w, rep)
        cfg = replace(cfg, seed=cfg.seed + rep)
        outcome = run_algorithm(inst, cfg)
        if not timing:
            outcome.wall_time_ms = 0.0
        rep_ = report(outcome)
        row = rep_.csv_row(cfg.algorithm, len(inst.requests), k_or_f(cfg))
        return RunResult(name, rep, seed, cfg, row, imbalance_series(outcome.schedule, step))
    except (VmBalanceError, OSError, ValueError) as exc:
        return RunResult(name, rep, 0, cfg, error=f"{type(exc).__name__}: {exc}")


def run_experiment(spec: ExperimentSpec) -> list[RunResult]:
    tasks = [(i, w, rep, cfg, spec.series_step_slots, spec.timing)
             for i, w in enumerate(spec.workloads)
             for cfg in spec.algorithms
             for rep in range(spec.repetitions)]
    if spec.workers <= 1:
        return [_execute(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=spec.workers) as pool:
        return list(pool.map(_execute, tasks))


def summarize(results: list[RunResult]) -> list[list]:
    """Mean of each numeric column per (workload, algorithm setting)."""
    groups: dict = {}
    for r in results:
        if r.row is None:
            continue
        groups.setdefault((r.workload, label(r.cfg)), []).append(r.row)
    rows = []
    for (workload, _), runs in groups.items():
        first = dict(zip(CSV_COLUMNS, runs[0]))
        out = [workload, len(runs)]
        for col in CSV_COLUMNS:
            if col in NUMERIC:
                i = CSV_COLUMNS.index(col)
                mean = sum(float(row[i]) for row in runs) / len(runs)
                out.append(repr(mean))
            else:
                out.append(first[col])
        rows.append(out)
    return rows


def write_reports(spec: ExperimentSpec, results: list[RunResult]) -> Path:
    out = Path(spec.outputs)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "runs.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_COLUMNS)
        for r in results:
            if r.row is not None:
                w.writerow([r.workload, r.repetition, r.seed] + r.row)
    with (out / "summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        w.writerows(summarize(results))
    series: dict = {}
    for r in results:
        if r.row is not None:
            series.setdefault((r.workload, label(r.cfg)), []).append(r)
    for (workload, name), runs in series.items():
        with (out / f"series_{workload}_{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("repetition", "slot", "imd"))
            for r in runs:
                for slot, value in r.series:
                    w.writerow((r.repetition, slot, repr(value)))
    failed = [r for r in results if r.error]
    if failed:
        with (out / "errors.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("workload", "algorithm", "repetition", "error"))
            for r in failed:
                w.writerow((r.workload, label(r.cfg), r.repetition, r.error))
    return out
