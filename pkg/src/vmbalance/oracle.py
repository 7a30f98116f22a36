"""Exact minimum of the largest PM load, for instances small enough to search."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import Infeasible, TooLarge
from .model import PmState, request_capacity_makespan
from .workload import WorkloadInstance

MAX_PMS = 4


@dataclass
class OracleResult:
    opt_cm_max: Fraction
    witness: dict  # request id -> pm id
    explored: int


def lower_bound_p0(instance: WorkloadInstance, m: Optional[int] = None) -> Fraction:
    """Mean request CM per PM; no assignment can keep every PM below it."""
    m = instance.n_pms if m is None else m
    if m < 1:
        raise ValueError("m must be >= 1")
    return instance.total_cm() / m


def solve_exact(instance: WorkloadInstance, limit: int = 10) -> OracleResult:
    """Branch and bound over whole-request assignments.

    Requests are tried largest CM first. A branch is cut when the PM can't
    hold the request or when its load would reach the incumbent, and only
    the first idle PM of each type is tried. Search stops early once the
    incumbent meets ``max(P0, largest request CM)``.
    """
    requests = instance.requests
    m = instance.n_pms
    if len(requests) > limit:
        raise TooLarge(f"{len(requests)} requests exceeds the oracle limit of {limit}")
    if m > MAX_PMS:
        raise TooLarge(f"{m} PMs exceeds the oracle limit of {MAX_PMS}")
    if not requests:
        return OracleResult(Fraction(0), {}, 1)
    if m == 0:
        raise Infeasible("no PMs")

    den = instance.capacity_denominator
    pms = [PmState(i, spec, instance.horizon, den) for i, spec in enumerate(instance.pm_pool)]
    order = sorted(requests, key=lambda r: (-request_capacity_makespan(r), r.id))
    cms = [pms[0].units(r) * r.duration_slots for r in order]
    floor_units = max(-(-sum(cms) // m), max(cms))

    best_units: Optional[int] = None
    best: dict = {}
    current: dict = {}
    explored = 0

    def search(i: int, load_max: int) -> bool:
        nonlocal best_units, best, explored
        explored += 1
        if i == len(order):
            best_units, best = load_max, dict(current)
            return best_units <= floor_units
        r, c = order[i], cms[i]
        idle_seen = set()
        for pm in pms:
            if not pm.assigned:
                if pm.spec in idle_seen:
                    continue
                idle_seen.add(pm.spec)
            after = pm.cm_units + c
            if best_units is not None and max(after, load_max) >= best_units:
                continue
            if not pm.fits(r):
                continue
            pm.place(r)
            current[r.id] = pm.pm_id
            done = search(i + 1, max(after, load_max))
            del current[r.id]
            pm.remove(r.id)
            if done:
                return True
        return False

    search(0, 0)
    if best_units is None:
        raise Infeasible("no assignment satisfies the capacity constraint")
    return OracleResult(Fraction(best_units, den), best, explored)
