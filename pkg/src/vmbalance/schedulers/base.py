"""Shared machinery: machine pool, run bookkeeping and interval splitting."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Optional

from ..errors import InfeasibleInstance, InvalidConfig, InvalidK
from ..model import (
    Decision, PmState, Schedule, SchedulerOutcome, VmRequest, capacity_units,
)
from ..workload import WorkloadInstance

ALGORITHMS = ("Random", "RoundRobin", "LPT", "PMG", "OLRSA",
              "PrepartitionOff", "PrepartitionOn1", "PrepartitionOn2")
OFFLINE = ("RoundRobin", "LPT", "PMG", "PrepartitionOff")
ONLINE = ("Random", "OLRSA", "PrepartitionOn1", "PrepartitionOn2")
USES_K = ("PrepartitionOff", "PrepartitionOn1")


@dataclass(frozen=True)
class SchedulerConfig:
    algorithm: str
    k: int = 4
    f: Fraction = Fraction(1, 8)
    # None: 192 slot-fractions per day of horizon (16 busy hours out of 24)
    cm_bound: Optional[Fraction] = None
    pmg_factor: Fraction = Fraction(1, 10)
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfig(f"unknown algorithm {self.algorithm!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise InvalidK(f"k must be a positive integer, got {self.k!r}")
        for name in ("f", "pmg_factor", "cm_bound"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, Fraction):
                object.__setattr__(self, name, Fraction(str(value)))
        if not 0 < self.f <= Fraction(1, 2):
            raise InvalidConfig("f must be in (0, 0.5]")
        if self.cm_bound is not None and self.cm_bound <= 0:
            raise InvalidConfig("cm_bound must be positive")
        if not 0 < self.pmg_factor < 1:
            raise InvalidConfig("pmg_factor must be in (0, 1)")

    def effective_cm_bound(self, instance: WorkloadInstance) -> Fraction:
        if self.cm_bound is not None:
            return self.cm_bound
        per_day = Fraction(16 * 60, instance.slot_config.slot_length_minutes)
        return per_day * instance.horizon / instance.slot_config.slots_per_day

    def with_(self, **changes) -> "SchedulerConfig":
        return replace(self, **changes)

    def to_json(self) -> dict:
        return {"algorithm": self.algorithm, "k": self.k, "f": str(self.f),
                "cm_bound": None if self.cm_bound is None else str(self.cm_bound),
                "pmg_factor": str(self.pmg_factor), "seed": self.seed}

    @classmethod
    def from_json(cls, doc: dict) -> "SchedulerConfig":
        doc = dict(doc)
        for name in ("f", "pmg_factor", "cm_bound"):
            if doc.get(name) is not None:
                doc[name] = Fraction(str(doc[name]))
        return cls(**doc)


class MachinePool:
    """PMs plus a min-CM priority queue per hosting group.

    Group ``None`` holds every PM (for free-form requests); group ``t``
    holds PMs of catalog type ``t``. Ties on CM resolve to the lower pm_id.
    """

    def __init__(self, instance: WorkloadInstance):
        self.denominator = instance.capacity_denominator
        self.pms = [PmState(i, spec, instance.horizon, self.denominator)
                    for i, spec in enumerate(instance.pm_pool)]
        self._version = [0] * len(self.pms)
        self._groups: dict[Optional[int], list[int]] = {None: list(range(len(self.pms)))}
        for pm in self.pms:
            self._groups.setdefault(pm.spec.pm_type, []).append(pm.pm_id)
        self._heaps = {g: [(0, i, 0) for i in ids] for g, ids in self._groups.items()}

    def __len__(self):
        return len(self.pms)

    def group(self, r: VmRequest) -> list[PmState]:
        return [self.pms[i] for i in self._groups.get(r.pm_family, [])]

    def units(self, r: VmRequest) -> int:
        return capacity_units(r.capacity_fraction, self.denominator)

    def cm_units(self, r: VmRequest) -> int:
        return self.units(r) * r.duration_slots

    def _touch(self, pm: PmState):
        self._version[pm.pm_id] += 1
        entry = (pm.cm_units, pm.pm_id, self._version[pm.pm_id])
        for g in (None, pm.spec.pm_type):
            heapq.heappush(self._heaps[g], entry)

    def place(self, pm: PmState, r: VmRequest):
        pm.place(r)
        self._touch(pm)

    def remove(self, pm: PmState, request_id: int) -> VmRequest:
        r = pm.remove(request_id)
        self._touch(pm)
        return r

    def sorted_group(self, r: VmRequest) -> list[PmState]:
        """PMs able to host ``r``'s family in (CM, pm_id) order."""
        return sorted(self.group(r), key=lambda pm: (pm.cm_units, pm.pm_id))

    def pick_min(self, r: VmRequest,
                 accept: Optional[Callable[[PmState], bool]] = None) -> Optional[PmState]:
        """Feasible PM with the smallest CM, or None."""
        heap = self._heaps.get(r.pm_family, [])
        popped = []
        chosen = None
        while heap:
            entry = heapq.heappop(heap)
            if entry[2] != self._version[entry[1]]:
                continue
            popped.append(entry)
            pm = self.pms[entry[1]]
            if pm.fits(r) and (accept is None or accept(pm)):
                chosen = pm
                break
        for entry in popped:
            heapq.heappush(heap, entry)
        return chosen


class Run:
    """Mutable bookkeeping for one scheduler invocation."""

    def __init__(self, instance: WorkloadInstance):
        self.instance = instance
        self.pool = MachinePool(instance)
        self.origins = {r.id: r for r in instance.requests}
        if len(self.origins) != len(instance.requests):
            raise ValueError("request ids must be unique")
        self.requests: dict[int, VmRequest] = {}
        self.assignments: dict[int, int] = {}
        self.segments: dict[int, list[int]] = {r.id: [r.id] for r in instance.requests}
        self.partition_count = 0
        self.decisions: list[Decision] = []
        self._next_id = max(self.origins, default=-1) + 1

    def new_id(self) -> int:
        self._next_id += 1
        return self._next_id - 1

    def replace_with_segments(self, item: VmRequest, pieces: list[VmRequest]):
        """Swap ``item`` for ``pieces`` in its origin's lineage."""
        lineage = self.segments[item.origin_id]
        i = lineage.index(item.id)
        lineage[i:i + 1] = [p.id for p in pieces]

    def split(self, item: VmRequest, lengths: list[int], slot=None) -> list[VmRequest]:
        pieces = []
        start = item.start_slot
        for length in lengths:
            pieces.append(VmRequest(self.new_id(), start, start + length,
                                    item.capacity_fraction, item.vm_type,
                                    origin_id=item.origin_id))
            start += length
        assert start == item.end_slot
        self.replace_with_segments(item, pieces)
        # a re-split segment was already counted once
        self.partition_count += len(pieces) - (0 if item.id == item.origin_id else 1)
        self.decisions.append(Decision(item.id, item.origin_id, None, slot, "split"))
        return pieces

    def assign(self, pm: PmState, r: VmRequest, slot=None, action="place"):
        self.pool.place(pm, r)
        self.requests[r.id] = r
        self.assignments[r.id] = pm.pm_id
        self.decisions.append(Decision(r.id, r.origin_id, pm.pm_id, slot, action))

    def place_min(self, r: VmRequest, slot=None) -> PmState:
        pm = self.pool.pick_min(r)
        if pm is None:
            raise InfeasibleInstance(r.id)
        self.assign(pm, r, slot)
        return pm

    def move(self, r: VmRequest, src: PmState, dst: PmState):
        self.pool.remove(src, r.id)
        self.pool.place(dst, r)
        self.assignments[r.id] = dst.pm_id
        self.decisions.append(Decision(r.id, r.origin_id, dst.pm_id, None, "migrate",
                                       from_pm=src.pm_id))

    def outcome(self) -> SchedulerOutcome:
        schedule = Schedule(
            origins=self.origins, requests=self.requests, assignments=self.assignments,
            segments=self.segments, pm_states=self.pool.pms,
            partition_count=self.partition_count,
        )
        return SchedulerOutcome(schedule, self.partition_count, self.decisions)


def segment_lengths_by_bound(r: VmRequest, bound_cm: Fraction) -> list[int]:
    """Cut ``r`` into runs of ``max(1, floor(bound/d))`` slots; the last is the remainder."""
    seg = max(1, math.floor(bound_cm / r.capacity_fraction))
    full, rest = divmod(r.duration_slots, seg)
    return [seg] * full + ([rest] if rest else [])


def equal_segment_lengths(duration: int, parts: int) -> list[int]:
    """``parts`` near-equal runs; earlier runs take the extra slots."""
    q, rem = divmod(duration, parts)
    return [q + 1] * rem + [q] * (parts - rem)
