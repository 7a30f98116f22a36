"""Slot clock for online schedulers.

Requests are revealed at their arrival slot (the start slot unless the
request carries an earlier ``arrival_slot``) and wait in a pending queue
until their start slot, when the scheduler's ``dispatch`` step is invoked.
Segments handed back by ``dispatch`` re-enter the same queue.
"""

from __future__ import annotations

import heapq
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .model import SchedulerOutcome, VmRequest


@dataclass
class ArrivedStats:
    """Running totals over revealed original requests, in CM units."""

    count: int = 0
    sum_units: int = 0
    max_units: int = 0

    def add(self, cm_units: int):
        self.count += 1
        self.sum_units += cm_units
        self.max_units = max(self.max_units, cm_units)


@dataclass
class SimClock:
    current_slot: int = 0
    pending: list = field(default_factory=list)
    stats: ArrivedStats = field(default_factory=ArrivedStats)

    def advance(self, slot: int):
        if slot < self.current_slot:
            raise RuntimeError("clock moved backwards")
        self.current_slot = slot

    def push(self, r: VmRequest):
        heapq.heappush(self.pending, (r.start_slot, r.origin_id, r.id, r))

    def next_due(self):
        return self.pending[0][0] if self.pending else None

    def pop(self) -> VmRequest:
        return heapq.heappop(self.pending)[3]


def run_online(instance, scheduler, cfg=None) -> SchedulerOutcome:
    """Drive ``scheduler`` over ``instance`` and return its outcome.

    ``scheduler`` is either an OnlineScheduler instance or a class, which
    is then built from ``(instance, cfg)``.
    """
    if isinstance(scheduler, type):
        scheduler = scheduler(instance, cfg)
    cm_units = scheduler.run.pool.cm_units
    arrivals = sorted(instance.requests, key=lambda r: (r.arrival, r.start_slot, r.id))
    clock = SimClock()
    i = 0
    n = len(arrivals)
    while i < n or clock.pending:
        candidates = []
        if i < n:
            candidates.append(arrivals[i].arrival)
        if clock.pending:
            candidates.append(clock.next_due())
        clock.advance(min(candidates))
        now = clock.current_slot
        while i < n and arrivals[i].arrival == now:
            clock.stats.add(cm_units(arrivals[i]))
            clock.push(arrivals[i])
            i += 1
        while clock.pending and clock.next_due() <= now:
            for piece in scheduler.dispatch(clock.pop(), clock):
                if piece.start_slot < now:
                    raise RuntimeError("segment scheduled in the past")
                clock.push(piece)
    return scheduler.outcome()


def write_decisions(outcome: SchedulerOutcome, path) -> None:
    with Path(path).open("w") as fh:
        for d in outcome.decisions_log:
            fh.write(json.dumps(d.to_json(), sort_keys=True) + "\n")


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, (time.perf_counter() - t0) * 1000.0
