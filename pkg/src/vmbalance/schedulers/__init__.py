"""Placement algorithms behind one entry point, :func:`run_algorithm`."""

from __future__ import annotations

import time

from ..errors import InvalidConfig
from ..model import SchedulerOutcome
from ..workload import WorkloadInstance
from .base import (
    ALGORITHMS, OFFLINE, ONLINE, USES_K, MachinePool, Run, SchedulerConfig,
    equal_segment_lengths, segment_lengths_by_bound,
)
from .baselines import (
    Olrsa, OnlineScheduler, RandomFit, lpt, pmg, pmg_rebalance, round_robin,
)
from .prepartition import PrepartitionOn1, PrepartitionOn2, prepartition_off

ONLINE_SCHEDULERS = {
    "Random": RandomFit,
    "OLRSA": Olrsa,
    "PrepartitionOn1": PrepartitionOn1,
    "PrepartitionOn2": PrepartitionOn2,
}


def schedule_offline(instance: WorkloadInstance, cfg: SchedulerConfig) -> SchedulerOutcome:
    if cfg.algorithm == "RoundRobin":
        return round_robin(instance)
    if cfg.algorithm == "LPT":
        return lpt(instance)
    if cfg.algorithm == "PMG":
        return pmg(instance, cfg.pmg_factor)
    if cfg.algorithm == "PrepartitionOff":
        return prepartition_off(instance, cfg.k)
    raise InvalidConfig(f"{cfg.algorithm} is not an offline algorithm")


def run_algorithm(instance: WorkloadInstance, cfg: SchedulerConfig) -> SchedulerOutcome:
    """Run any algorithm, online ones through the slot clock, and time it."""
    from ..engine import run_online

    t0 = time.perf_counter()
    if cfg.algorithm in ONLINE_SCHEDULERS:
        outcome = run_online(instance, ONLINE_SCHEDULERS[cfg.algorithm], cfg)
    else:
        outcome = schedule_offline(instance, cfg)
    outcome.wall_time_ms = (time.perf_counter() - t0) * 1000.0
    return outcome


__all__ = [
    "ALGORITHMS", "OFFLINE", "ONLINE", "USES_K", "MachinePool", "Run", "SchedulerConfig",
    "equal_segment_lengths", "segment_lengths_by_bound", "Olrsa", "OnlineScheduler",
    "RandomFit", "lpt", "pmg", "pmg_rebalance", "round_robin", "PrepartitionOn1",
    "PrepartitionOn2", "prepartition_off", "schedule_offline", "run_algorithm",
    "ONLINE_SCHEDULERS",
]
