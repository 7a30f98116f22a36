"""Workload instances from SWF-style traces, synthetic generators and JSON."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyTrace, InvalidParams, MalformedLine
from .model import (
    CATALOG_FRACTIONS, PM_CATALOG, PmSpec, SlotConfig, VmRequest, VmType,
    common_denominator, request_capacity_makespan,
)

log = logging.getLogger(__name__)

SWF_FIELDS = 18
# Target mean PM utilization used when the synthetic horizon is derived.
AUTO_TARGET_UTILIZATION = 0.15
DEFAULT_POOL_SIZE = 20

DEFAULT_PROC_BUCKETS = (
    (1, Fraction(1, 16)),
    (2, Fraction(1, 8)),
    (4, Fraction(1, 4)),
    (8, Fraction(1, 2)),
)


@dataclass
class WorkloadInstance:
    requests: list[VmRequest]
    pm_pool: list[PmSpec]
    slot_config: SlotConfig
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.requests = sorted(self.requests, key=lambda r: (r.arrival, r.start_slot, r.id))

    @property
    def horizon(self) -> int:
        return self.slot_config.horizon_slots

    @property
    def capacity_denominator(self) -> int:
        return common_denominator(
            [Fraction(1, 16)] + [r.capacity_fraction for r in self.requests])

    @property
    def n_pms(self) -> int:
        return len(self.pm_pool)

    def total_cm(self) -> Fraction:
        return sum((request_capacity_makespan(r) for r in self.requests), Fraction(0))

    def with_pool(self, pm_pool: Sequence[PmSpec]) -> "WorkloadInstance":
        return WorkloadInstance(list(self.requests), list(pm_pool), self.slot_config,
                                dict(self.provenance))


@dataclass(frozen=True)
class SyntheticParams:
    n_vms: int
    mean_slots: float = 864
    std_slots: float = 288
    type_distribution: tuple = (0.125,) * 8
    seed: int = 0
    pm_counts: Optional[tuple] = None
    horizon_slots: Optional[int] = None
    mode: str = "duration"
    slot_length_minutes: int = 5

    def validate(self):
        if self.n_vms < 1:
            raise InvalidParams("n_vms must be >= 1")
        if self.mean_slots <= 0 or self.std_slots <= 0:
            raise InvalidParams("mean_slots and std_slots must be positive")
        if len(self.type_distribution) != len(VmType):
            raise InvalidParams("type_distribution needs one probability per VM type")
        if any(p < 0 for p in self.type_distribution):
            raise InvalidParams("type probabilities must be non-negative")
        if abs(sum(self.type_distribution) - 1) > 1e-9:
            raise InvalidParams("type probabilities must sum to 1")
        if self.mode not in ("duration", "both"):
            raise InvalidParams(f"unknown generator mode {self.mode!r}")
        if self.pm_counts is not None and (len(self.pm_counts) != 3 or min(self.pm_counts) < 0):
            raise InvalidParams("pm_counts needs three non-negative counts")
        if self.horizon_slots is not None and self.horizon_slots < 1:
            raise InvalidParams("horizon_slots must be positive")

    def to_json(self) -> dict:
        return {
            "n_vms": self.n_vms, "mean_slots": self.mean_slots, "std_slots": self.std_slots,
            "type_distribution": list(self.type_distribution), "seed": self.seed,
            "pm_counts": None if self.pm_counts is None else list(self.pm_counts),
            "horizon_slots": self.horizon_slots, "mode": self.mode,
            "slot_length_minutes": self.slot_length_minutes,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SyntheticParams":
        doc = dict(doc)
        if "type_distribution" in doc:
            doc["type_distribution"] = tuple(doc["type_distribution"])
        if doc.get("pm_counts") is not None:
            doc["pm_counts"] = tuple(doc["pm_counts"])
        return cls(**doc)


def default_pm_pool(n_pms_per_type: Sequence[int]) -> list[PmSpec]:
    if any(n < 0 for n in n_pms_per_type):
        raise InvalidParams("PM counts must be non-negative")
    pool = []
    for pm_type, count in zip(sorted(PM_CATALOG), n_pms_per_type):
        pool.extend([PM_CATALOG[pm_type]] * count)
    return pool


def _family_load_shares(type_distribution) -> dict[int, float]:
    shares = {t: 0.0 for t in PM_CATALOG}
    for vm_type, p in zip(VmType, type_distribution):
        shares[vm_type.family] += p * float(vm_type.fraction)
    total = sum(shares.values())
    return {t: s / total for t, s in shares.items()}


def auto_pm_counts(total: int, type_distribution) -> tuple:
    """Split ``total`` PMs across the three types by expected family load."""
    shares = _family_load_shares(type_distribution)
    used = [t for t in PM_CATALOG if shares[t] > 0]
    total = max(total, len(used))
    # largest remainder, at least one PM per family that receives VMs
    exact = {t: shares[t] * total for t in PM_CATALOG}
    counts = {t: (max(1, int(exact[t])) if t in used else 0) for t in PM_CATALOG}
    order = sorted(used, key=lambda t: (-(exact[t] - int(exact[t])), t))
    i = 0
    while sum(counts.values()) < total:
        counts[order[i % len(order)]] += 1
        i += 1
    return tuple(counts[t] for t in sorted(PM_CATALOG))


def generate_synthetic(params: SyntheticParams) -> WorkloadInstance:
    """Draw ``n_vms`` catalog requests with Normal durations.

    Durations are ``round(Normal(mean, std))`` clipped to ``[1, 4*mean]``.
    In ``mode="both"`` start slots are Normal as well, otherwise uniform
    over ``[0, horizon - duration]``.
    """
    params.validate()
    rng = np.random.default_rng(params.seed)
    types = list(VmType)
    pm_counts = params.pm_counts or auto_pm_counts(DEFAULT_POOL_SIZE, params.type_distribution)
    pool = default_pm_pool(pm_counts)
    if not pool:
        raise InvalidParams("empty PM pool")

    max_dur = max(1, int(round(4 * params.mean_slots)))
    durations = np.clip(np.rint(rng.normal(params.mean_slots, params.std_slots, params.n_vms)),
                        1, max_dur).astype(np.int64)
    type_idx = rng.choice(len(types), size=params.n_vms, p=np.asarray(params.type_distribution))

    horizon = params.horizon_slots
    if horizon is None:
        expected = params.n_vms * params.mean_slots * sum(
            p * float(t.fraction) for t, p in zip(types, params.type_distribution))
        horizon = max(int(durations.max()),
                      math.ceil(expected / (len(pool) * AUTO_TARGET_UTILIZATION)))

    requests = []
    for i in range(params.n_vms):
        dur = int(min(durations[i], horizon))
        hi = horizon - dur
        if params.mode == "both":
            start = int(np.clip(np.rint(rng.normal(params.mean_slots, params.std_slots)), 0, hi))
        else:
            start = int(rng.integers(0, hi + 1))
        vm_type = types[int(type_idx[i])]
        requests.append(VmRequest(i, start, start + dur, vm_type.fraction, vm_type))
    max_end = max(r.end_slot for r in requests)
    return WorkloadInstance(
        requests, pool,
        SlotConfig(params.slot_length_minutes, max_end + 1),
        {"kind": "synthetic", "params": params.to_json()},
    )


def generate_small_instance(seed: int, n: int, m: int, max_duration: int = 20,
                            fractions: Sequence[Fraction] = CATALOG_FRACTIONS,
                            max_start: Optional[int] = None) -> WorkloadInstance:
    """Random free-form instance on ``m`` identical PMs, sized for the oracle."""
    rng = np.random.default_rng(seed)
    max_start = max_duration if max_start is None else max_start
    requests = []
    for i in range(n):
        start = int(rng.integers(0, max_start + 1))
        dur = int(rng.integers(1, max_duration + 1))
        frac = Fraction(fractions[int(rng.integers(0, len(fractions)))])
        requests.append(VmRequest(i, start, start + dur, frac))
    max_end = max(r.end_slot for r in requests)
    return WorkloadInstance(requests, [PM_CATALOG[1]] * m, SlotConfig(5, max_end + 1),
                            {"kind": "small", "seed": seed, "n": n, "m": m,
                             "max_duration": max_duration})


def parse_proc_buckets(text: str) -> tuple:
    """Parse ``"1:1/16,2:1/8,4:1/4,8:1/2"`` into bucket thresholds."""
    buckets = []
    for part in text.split(","):
        lo, frac = part.split(":")
        buckets.append((int(lo), Fraction(frac)))
    buckets.sort()
    if not buckets or buckets[0][0] > 1:
        raise InvalidParams("processor buckets must start at 1")
    return tuple(buckets)


def proc_fraction(processors: int, buckets=DEFAULT_PROC_BUCKETS) -> Fraction:
    frac = buckets[0][1]
    for lo, f in buckets:
        if processors >= lo:
            frac = f
    return frac


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def parse_trace(path, slot_config: Optional[SlotConfig] = None,
                type_mapping=DEFAULT_PROC_BUCKETS,
                pm_pool: Optional[Sequence[PmSpec]] = None) -> WorkloadInstance:
    """Read an 18-field SWF-style log into a free-form instance.

    Job id, submit time, run time and allocated processors come from fields
    1, 2, 4 and 5. Jobs with non-positive run time or processor count are
    dropped and counted in ``provenance["dropped"]``.
    """
    slot_len = (slot_config or SlotConfig()).slot_length_minutes
    slot_seconds = 60 * slot_len
    requests = []
    dropped = 0
    path = Path(path)
    with path.open() as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith(";"):
                continue
            parts = line.split()
            if len(parts) != SWF_FIELDS:
                raise MalformedLine(line_no, f"expected {SWF_FIELDS} fields, got {len(parts)}")
            try:
                values = [Fraction(p) for p in parts]
            except ValueError:
                raise MalformedLine(line_no, "non-numeric field") from None
            job_id, submit, runtime, procs = values[0], values[1], values[3], values[4]
            if runtime <= 0 or procs <= 0:
                dropped += 1
                continue
            if job_id.denominator != 1 or submit < 0:
                raise MalformedLine(line_no, "bad job id or submit time")
            start = math.ceil(submit / slot_seconds)
            duration = max(1, _round_half_up(runtime / slot_seconds))
            frac = proc_fraction(math.floor(procs), type_mapping)
            requests.append(VmRequest(int(job_id), start, start + duration, frac))
    if dropped:
        log.warning("%s: dropped %d jobs with non-positive runtime or processors", path, dropped)
    if not requests:
        raise EmptyTrace(f"{path}: no usable jobs")
    max_end = max(r.end_slot for r in requests)
    return WorkloadInstance(
        requests,
        list(pm_pool) if pm_pool is not None else default_pm_pool((1, 1, 1)),
        SlotConfig(slot_len, max_end + 1),
        {"kind": "trace", "path": path.name, "dropped": dropped},
    )


def instance_to_json(inst: WorkloadInstance) -> dict:
    pms = []
    for spec in inst.pm_pool:
        if pms and pms[-1]["type"] == spec.pm_type:
            pms[-1]["count"] += 1
        else:
            pms.append({"type": spec.pm_type, "count": 1})
    requests = []
    for r in inst.requests:
        doc = {"id": r.id, "start": r.start_slot, "end": r.end_slot,
               "fraction_num": r.capacity_fraction.numerator,
               "fraction_den": r.capacity_fraction.denominator,
               "vm_type": None if r.vm_type is None else r.vm_type.value}
        if r.origin_id != r.id:
            doc["origin_id"] = r.origin_id
        if r.arrival_slot is not None:
            doc["arrival"] = r.arrival_slot
        requests.append(doc)
    return {
        "slot_config": {"slot_length_minutes": inst.slot_config.slot_length_minutes,
                        "horizon_slots": inst.slot_config.horizon_slots},
        "pms": pms,
        "requests": requests,
        "provenance": inst.provenance,
    }


def instance_from_json(doc: dict) -> WorkloadInstance:
    sc = doc["slot_config"]
    pool = []
    for entry in doc["pms"]:
        pool.extend([PM_CATALOG[int(entry["type"])]] * int(entry["count"]))
    requests = []
    for r in doc["requests"]:
        requests.append(VmRequest(
            id=int(r["id"]), start_slot=int(r["start"]), end_slot=int(r["end"]),
            capacity_fraction=Fraction(int(r["fraction_num"]), int(r["fraction_den"])),
            vm_type=None if r.get("vm_type") is None else VmType(r["vm_type"]),
            origin_id=r.get("origin_id"), arrival_slot=r.get("arrival"),
        ))
    return WorkloadInstance(requests, pool,
                            SlotConfig(int(sc["slot_length_minutes"]), int(sc["horizon_slots"])),
                            doc.get("provenance", {}))


def dump_instance(inst: WorkloadInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_json(inst), indent=1, sort_keys=True) + "\n")


def load_instance(path) -> WorkloadInstance:
    return instance_from_json(json.loads(Path(path).read_text()))
