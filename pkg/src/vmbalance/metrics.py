"""Evaluation metrics over a finished Schedule.

A single PM's utilization defaults to its own busy span. Datacenter-level
figures (average utilization, imbalance degree) measure every PM in use
over one common window, from the earliest start to the latest end over
those PMs, so a PM whose first request arrives late is not credited with
a shorter span. Idle PMs are left out of both.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import EmptySchedule, EmptyWindow, NoActivePms
from .model import PmState, Schedule, SchedulerOutcome

CSV_COLUMNS = ("algorithm", "n_vms", "k_or_f", "avg_utilization", "imd",
               "makespan_slots", "cm_max", "partitions", "wall_time_ms")
DEFAULT_SERIES_STEP = 288


@dataclass
class MetricReport:
    avg_utilization: float
    imbalance_degree: float
    makespan_slots: int
    cm_max: Fraction
    per_pm_cm: list
    partition_count: int
    wall_time_ms: float

    def csv_row(self, algorithm: str, n_vms: int, k_or_f="") -> list:
        return [algorithm, n_vms, k_or_f, repr(self.avg_utilization),
                repr(self.imbalance_degree), self.makespan_slots,
                repr(float(self.cm_max)), self.partition_count,
                f"{self.wall_time_ms:.3f}"]


def pm_utilization(pm: PmState, window: Optional[tuple[int, int]] = None) -> Fraction:
    """Mean committed capacity over ``window`` (default: the PM's busy span)."""
    if window is None:
        window = pm.busy_span()
        if window is None:
            return Fraction(0)
    lo, hi = window
    if hi <= lo:
        raise EmptyWindow(f"empty window {window}")
    if lo < 0 or hi > pm.horizon_slots:
        raise EmptyWindow(f"window {window} outside horizon")
    total = int(pm.committed[lo:hi].sum())
    return Fraction(total, pm.denominator * (hi - lo))


def imbalance_from_utilizations(utils) -> float:
    """Mean squared deviation of each PM's three-dimension average from the
    datacenter mean of each dimension.

    With one dimension standing in for CPU, memory and storage the three
    terms coincide and this is the population variance.
    """
    utils = list(utils)
    m = len(utils)
    if m == 0:
        raise NoActivePms("no PMs in use")
    cpu = mem = sto = [Fraction(u) for u in utils]
    cpu_u = sum(cpu) / m
    mem_u = sum(mem) / m
    sto_u = sum(sto) / m
    total = Fraction(0)
    for c, me, s in zip(cpu, mem, sto):
        avg_i = (c + me + s) / 3
        total += ((avg_i - cpu_u) ** 2 + (avg_i - mem_u) ** 2 + (avg_i - sto_u) ** 2) / 3
    return float(total / m)


def common_window(pms) -> Optional[tuple[int, int]]:
    """Earliest start to latest end over the PMs in use."""
    spans = [pm.busy_span() for pm in pms if pm.assigned]
    if not spans:
        return None
    return min(lo for lo, _ in spans), max(hi for _, hi in spans)


def imbalance_degree(pms) -> float:
    active = [pm for pm in pms if pm.assigned]
    if not active:
        raise NoActivePms("no PMs in use")
    window = common_window(active)
    return imbalance_from_utilizations(pm_utilization(pm, window) for pm in active)


def average_utilization(pms) -> float:
    active = [pm for pm in pms if pm.assigned]
    if not active:
        return 0.0
    window = common_window(active)
    return float(sum(pm_utilization(pm, window) for pm in active) / len(active))


def makespan(schedule: Schedule) -> int:
    """Largest per-PM span between first start and last finish."""
    spans = [pm.busy_span() for pm in schedule.pm_states if pm.assigned]
    if not spans:
        raise EmptySchedule("schedule has no assignments")
    return max(hi - lo for lo, hi in spans)


def cm_max(schedule: Schedule) -> Fraction:
    return max((pm.capacity_makespan for pm in schedule.pm_states), default=Fraction(0))


def imbalance_series(schedule: Schedule, step: int = DEFAULT_SERIES_STEP):
    """IMD over growing prefixes sampled every ``step`` slots.

    Each sample covers the common window cut off at ``t``; only PMs whose
    first request starts before ``t`` take part. The last sample is taken
    at the latest end slot of the schedule.
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    active = [pm for pm in schedule.pm_states if pm.assigned]
    if not active:
        return []
    starts = [pm.busy_span()[0] for pm in active]
    prefix = [np.concatenate(([0], np.cumsum(pm.committed, dtype=np.int64))) for pm in active]
    first, end = common_window(active)
    samples = [t for t in range(step, end, step) if t > first] + [end]
    series = []
    for t in samples:
        utils = []
        for pm, lo, cum in zip(active, starts, prefix):
            if t <= lo:
                continue
            utils.append(Fraction(int(cum[t] - cum[first]), pm.denominator * (t - first)))
        series.append((t, imbalance_from_utilizations(utils) if utils else 0.0))
    return series


def report(outcome: SchedulerOutcome) -> MetricReport:
    schedule = outcome.schedule
    pms = schedule.pm_states
    per_pm = schedule.per_pm_cm()
    return MetricReport(
        avg_utilization=average_utilization(pms),
        imbalance_degree=imbalance_degree(pms),
        makespan_slots=makespan(schedule),
        cm_max=max(per_pm, default=Fraction(0)),
        per_pm_cm=per_pm,
        partition_count=outcome.partition_count,
        wall_time_ms=outcome.wall_time_ms,
    )
