"""Domain types: slots, VM requests, physical machines and schedules.

Capacity is one-dimensional and normalized to 1 per PM. Internally every
PM stores committed capacity as integers in units of ``1/denominator`` so
that the per-slot constraint ``sum(d_j) <= 1`` is checked exactly.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import CapacityExceeded, FamilyMismatch, NotAssigned

DEFAULT_DENOMINATOR = 16


@dataclass(frozen=True)
class SlotConfig:
    slot_length_minutes: int = 5
    horizon_slots: int = 1

    def __post_init__(self):
        if self.slot_length_minutes < 1:
            raise ValueError("slot_length_minutes must be >= 1")
        if self.horizon_slots < 1:
            raise ValueError("horizon_slots must be >= 1")

    @property
    def slots_per_day(self) -> Fraction:
        return Fraction(24 * 60, self.slot_length_minutes)


@dataclass(frozen=True)
class PmSpec:
    pm_type: int
    compute_units: float
    memory_gb: float
    storage_gb: float


PM_CATALOG = {
    1: PmSpec(1, 16, 30, 3380),
    2: PmSpec(2, 52, 136.8, 3380),
    3: PmSpec(3, 40, 14, 3380),
}


@dataclass(frozen=True)
class VmSpec:
    compute_units: float
    memory_gb: float
    storage_gb: float
    family: int


class VmType(Enum):
    T1_1 = "1-1"
    T1_2 = "1-2"
    T1_3 = "1-3"
    T2_1 = "2-1"
    T2_2 = "2-2"
    T2_3 = "2-3"
    T3_1 = "3-1"
    T3_2 = "3-2"

    @property
    def spec(self) -> VmSpec:
        return VM_CATALOG[self]

    @property
    def family(self) -> int:
        return VM_CATALOG[self].family

    @property
    def fraction(self) -> Fraction:
        """Share of the hosting PM's compute units."""
        spec = VM_CATALOG[self]
        pm = PM_CATALOG[spec.family]
        return Fraction(str(spec.compute_units)) / Fraction(str(pm.compute_units))


VM_CATALOG = {
    VmType.T1_1: VmSpec(1, 1.875, 211.25, 1),
    VmType.T1_2: VmSpec(4, 7.5, 845, 1),
    VmType.T1_3: VmSpec(8, 15, 1690, 1),
    VmType.T2_1: VmSpec(6.5, 17.1, 422.5, 2),
    VmType.T2_2: VmSpec(13, 34.2, 845, 2),
    VmType.T2_3: VmSpec(26, 68.4, 1690, 2),
    VmType.T3_1: VmSpec(5, 1.875, 422.5, 3),
    VmType.T3_2: VmSpec(20, 7, 1690, 3),
}

CATALOG_FRACTIONS = (Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(1, 2))


@dataclass(frozen=True)
class VmRequest:
    """A fixed-interval reservation ``[start_slot, end_slot)``.

    ``origin_id`` links a segment back to the user request it was cut from;
    it equals ``id`` for requests that were never partitioned.
    ``vm_type`` is None for free-form requests, which any PM may host.
    """

    id: int
    start_slot: int
    end_slot: int
    capacity_fraction: Fraction
    vm_type: Optional[VmType] = None
    origin_id: Optional[int] = None
    arrival_slot: Optional[int] = None

    def __post_init__(self):
        if self.origin_id is None:
            object.__setattr__(self, "origin_id", self.id)
        if not isinstance(self.capacity_fraction, Fraction):
            object.__setattr__(self, "capacity_fraction", Fraction(self.capacity_fraction))
        if self.start_slot < 0:
            raise ValueError(f"request {self.id}: negative start_slot")
        if self.start_slot >= self.end_slot:
            raise ValueError(f"request {self.id}: start_slot must be < end_slot")
        if not 0 < self.capacity_fraction <= 1:
            raise ValueError(f"request {self.id}: capacity_fraction must be in (0, 1]")
        if self.arrival_slot is not None and self.arrival_slot > self.start_slot:
            raise ValueError(f"request {self.id}: arrival after start")

    @property
    def duration_slots(self) -> int:
        return self.end_slot - self.start_slot

    @property
    def pm_family(self) -> Optional[int]:
        return None if self.vm_type is None else self.vm_type.family

    @property
    def arrival(self) -> int:
        return self.start_slot if self.arrival_slot is None else self.arrival_slot

    @property
    def capacity_makespan(self) -> Fraction:
        return request_capacity_makespan(self)


def request_capacity_makespan(r: VmRequest) -> Fraction:
    """Capacity fraction times duration, in slot-fraction units."""
    return r.capacity_fraction * (r.end_slot - r.start_slot)


@functools.lru_cache(maxsize=1024)
def capacity_units(fraction: Fraction, denominator: int) -> int:
    scaled = fraction * denominator
    if scaled.denominator != 1:
        raise ValueError(f"fraction {fraction} is not a multiple of 1/{denominator}")
    return scaled.numerator


def common_denominator(fractions) -> int:
    den = 1
    for f in fractions:
        den = math.lcm(den, Fraction(f).denominator)
    return den


class PmState:
    """One machine: catalog spec, per-slot committed capacity and its CM."""

    def __init__(self, pm_id: int, spec: PmSpec, horizon_slots: int,
                 denominator: int = DEFAULT_DENOMINATOR):
        self.pm_id = pm_id
        self.spec = spec
        self.denominator = denominator
        self.committed = np.zeros(horizon_slots, dtype=np.int64)
        self.cm_units = 0
        self.assigned: dict[int, VmRequest] = {}

    @property
    def horizon_slots(self) -> int:
        return len(self.committed)

    @property
    def capacity_makespan(self) -> Fraction:
        return Fraction(self.cm_units, self.denominator)

    def committed_fraction(self, slot: int) -> Fraction:
        return Fraction(int(self.committed[slot]), self.denominator)

    def hosts_family(self, r: VmRequest) -> bool:
        return r.pm_family is None or r.pm_family == self.spec.pm_type

    def units(self, r: VmRequest) -> int:
        return capacity_units(r.capacity_fraction, self.denominator)

    def fits(self, r: VmRequest) -> bool:
        if not self.hosts_family(r):
            return False
        if r.end_slot > len(self.committed):
            raise ValueError(f"request {r.id} ends after the horizon")
        peak = int(self.committed[r.start_slot:r.end_slot].max())
        return peak + self.units(r) <= self.denominator

    def place(self, r: VmRequest) -> None:
        if not self.hosts_family(r):
            raise FamilyMismatch(
                f"VM type {r.vm_type.value} cannot run on PM type {self.spec.pm_type}")
        if r.id in self.assigned:
            raise ValueError(f"request {r.id} already on PM {self.pm_id}")
        if not self.fits(r):
            raise CapacityExceeded(f"request {r.id} exceeds capacity of PM {self.pm_id}")
        u = self.units(r)
        self.committed[r.start_slot:r.end_slot] += u
        self.cm_units += u * r.duration_slots
        self.assigned[r.id] = r

    def remove(self, request_id: int) -> VmRequest:
        try:
            r = self.assigned.pop(request_id)
        except KeyError:
            raise NotAssigned(f"request {request_id} is not on PM {self.pm_id}") from None
        u = self.units(r)
        self.committed[r.start_slot:r.end_slot] -= u
        self.cm_units -= u * r.duration_slots
        return r

    def busy_span(self) -> Optional[tuple[int, int]]:
        if not self.assigned:
            return None
        return (min(r.start_slot for r in self.assigned.values()),
                max(r.end_slot for r in self.assigned.values()))

    def copy(self) -> "PmState":
        other = PmState(self.pm_id, self.spec, len(self.committed), self.denominator)
        other.committed = self.committed.copy()
        other.cm_units = self.cm_units
        other.assigned = dict(self.assigned)
        return other

    def __eq__(self, other):
        if not isinstance(other, PmState):
            return NotImplemented
        return (self.pm_id == other.pm_id and self.spec == other.spec
                and self.denominator == other.denominator
                and self.cm_units == other.cm_units
                and self.assigned == other.assigned
                and np.array_equal(self.committed, other.committed))

    def __repr__(self):
        return (f"PmState(pm_id={self.pm_id}, type={self.spec.pm_type}, "
                f"cm={self.capacity_makespan}, n={len(self.assigned)})")


def try_place(pm: PmState, r: VmRequest) -> PmState:
    """Commit ``r`` to ``pm`` or raise without touching it."""
    pm.place(r)
    return pm


def remove(pm: PmState, request_id: int) -> PmState:
    pm.remove(request_id)
    return pm


@dataclass
class Schedule:
    """Assignment of request segments to PMs plus partition lineage."""

    origins: dict[int, VmRequest]
    requests: dict[int, VmRequest]
    assignments: dict[int, int]
    segments: dict[int, list[int]]
    pm_states: list[PmState]
    partition_count: int = 0

    @property
    def denominator(self) -> int:
        return self.pm_states[0].denominator if self.pm_states else DEFAULT_DENOMINATOR

    def pm(self, pm_id: int) -> PmState:
        return self.pm_states[pm_id]

    def active_pms(self) -> list[PmState]:
        return [pm for pm in self.pm_states if pm.assigned]

    def per_pm_cm(self) -> list[Fraction]:
        return [pm.capacity_makespan for pm in self.pm_states]


@dataclass(frozen=True)
class Decision:
    """One scheduler action, serialized as a JSON line."""

    request_id: int
    origin_id: int
    pm_id: Optional[int]
    slot: Optional[int]
    action: str = "place"
    from_pm: Optional[int] = None

    def to_json(self) -> dict:
        doc = {"slot": self.slot, "request_id": self.request_id,
               "origin_id": self.origin_id, "pm_id": self.pm_id,
               "action": self.action}
        if self.from_pm is not None:
            doc["from_pm"] = self.from_pm
        return doc


@dataclass
class SchedulerOutcome:
    schedule: Schedule
    partition_count: int
    decisions_log: list[Decision] = field(default_factory=list)
    wall_time_ms: float = 0.0
