"""Reference schedulers: Round-Robin, LPT, PMG, Random and OLRSA."""

from __future__ import annotations

import random
from fractions import Fraction

from ..errors import InfeasibleInstance
from ..model import Decision, PmState, SchedulerOutcome, VmRequest
from ..workload import WorkloadInstance
from .base import Run


def round_robin(instance: WorkloadInstance) -> SchedulerOutcome:
    """Hand requests out cyclically in input order, skipping PMs that lack room.

    Each PM family keeps its own cursor so that family-restricted requests
    still rotate over all machines able to host them.
    """
    run = Run(instance)
    cursors: dict = {}
    for r in instance.requests:
        group = run.pool.group(r)
        if not group:
            raise InfeasibleInstance(r.id, "no PM of a matching family")
        start = cursors.get(r.pm_family, 0)
        for step in range(len(group)):
            pm = group[(start + step) % len(group)]
            if pm.fits(r):
                run.assign(pm, r)
                cursors[r.pm_family] = (start + step + 1) % len(group)
                break
        else:
            raise InfeasibleInstance(r.id)
    return run.outcome()


def processing_order(requests, cm_of):
    """Longest processing time first; CM then id break ties."""
    return sorted(requests, key=lambda r: (-r.duration_slots, -cm_of(r), r.id))


def lpt(instance: WorkloadInstance) -> SchedulerOutcome:
    """Longest processing time first onto the least-loaded feasible PM."""
    run = Run(instance)
    _lpt_into(run, instance.requests)
    return run.outcome()


def _lpt_into(run: Run, requests):
    for r in processing_order(requests, run.pool.cm_units):
        run.place_min(r)


def pmg(instance: WorkloadInstance, pmg_factor=Fraction(1, 10)) -> SchedulerOutcome:
    """LPT placement followed by one threshold-driven migration pass."""
    run = Run(instance)
    _lpt_into(run, instance.requests)
    pmg_rebalance(run, Fraction(pmg_factor))
    return run.outcome()


def pmg_rebalance(run: Run, factor: Fraction) -> int:
    """Drain PMs above the low threshold, then re-home the drained VMs.

    Thresholds are ``(1 -/+ factor)`` times the mean CM of in-use PMs of the
    same family. Returns the number of migrations performed.
    """
    typed = any(r.vm_type is not None for r in run.origins.values())
    families: dict = {}
    for pm in run.pool.pms:
        families.setdefault(pm.spec.pm_type if typed else None, []).append(pm)
    migrations = 0
    for pms in families.values():
        in_use = [pm for pm in pms if pm.assigned]
        if not in_use:
            continue
        avg = Fraction(sum(pm.cm_units for pm in in_use), len(in_use))
        low = (1 - factor) * avg
        up = (1 + factor) * avg

        migration_list: list[tuple[VmRequest, PmState]] = []
        for pm in in_use:
            by_size = sorted(pm.assigned.values(), key=lambda r: (run.pool.cm_units(r), r.id))
            cm = pm.cm_units
            for r in by_size:
                if cm <= low:
                    break
                migration_list.append((r, pm))
                cm -= run.pool.cm_units(r)

        # drained VMs leave their source first so they can be re-placed anywhere
        for r, src in migration_list:
            run.pool.remove(src, r.id)
        migration_list.sort(key=lambda item: (-run.pool.cm_units(item[0]), item[0].id))

        leftovers = []
        for r, src in migration_list:
            c = run.pool.cm_units(r)
            dst = run.pool.pick_min(r, accept=lambda pm, c=c: pm.cm_units + c <= up)
            if dst is None:
                leftovers.append((r, src))
            else:
                migrations += _rehome(run, r, src, dst)
        for r, src in leftovers:
            dst = run.pool.pick_min(r)
            if dst is None:
                raise InfeasibleInstance(r.id, "no room while re-homing migrated VM")
            migrations += _rehome(run, r, src, dst)
    return migrations


def _rehome(run: Run, r: VmRequest, src: PmState, dst: PmState) -> int:
    run.pool.place(dst, r)
    run.assignments[r.id] = dst.pm_id
    if dst is src:
        return 0
    run.decisions.append(Decision(r.id, r.origin_id, dst.pm_id, None, "migrate",
                                  from_pm=src.pm_id))
    return 1


class OnlineScheduler:
    """Step contract driven by the slot clock in :mod:`vmbalance.engine`."""

    def __init__(self, instance: WorkloadInstance, cfg=None):
        self.instance = instance
        self.cfg = cfg
        self.run = Run(instance)

    def dispatch(self, item: VmRequest, clock) -> list[VmRequest]:
        """Handle one due item; return any new items to enqueue."""
        raise NotImplementedError

    def outcome(self) -> SchedulerOutcome:
        return self.run.outcome()


class Olrsa(OnlineScheduler):
    """Least Capacity_makespan PM with room, no partitioning."""

    def dispatch(self, item, clock):
        self.run.place_min(item, clock.current_slot)
        return []


class RandomFit(OnlineScheduler):
    def __init__(self, instance, cfg=None):
        super().__init__(instance, cfg)
        self.rng = random.Random(0 if cfg is None else cfg.seed)

    def dispatch(self, item, clock):
        feasible = [pm for pm in self.run.pool.group(item) if pm.fits(item)]
        if not feasible:
            raise InfeasibleInstance(item.id)
        self.run.assign(self.rng.choice(feasible), item, clock.current_slot)
        return []
