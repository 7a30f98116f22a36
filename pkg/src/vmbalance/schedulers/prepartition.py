"""Prepartition schedulers: cut long reservations into segments before placing them.

All CM arithmetic runs on integers in units of ``1/denominator``
slot-fractions; bounds derived from averages are kept as ``Fraction``.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import InfeasibleInstance, InvalidK
from ..model import SchedulerOutcome, VmRequest
from ..workload import WorkloadInstance
from .base import (
    Run, SchedulerConfig, equal_segment_lengths, segment_lengths_by_bound,
)
from .baselines import OnlineScheduler


def prepartition_off(instance: WorkloadInstance, k: int = 4) -> SchedulerOutcome:
    """Offline Prepartition.

    Every request whose CM reaches ``P0/k`` (with ``P0`` the mean load over
    all PMs) is cut into runs of CM at most ``P0/k``; segments are then
    placed largest-CM first onto the least-loaded feasible PM.
    """
    if not isinstance(k, int) or k < 1:
        raise InvalidK(f"k must be a positive integer, got {k!r}")
    run = Run(instance)
    pool = run.pool
    m = len(pool)
    if m == 0:
        raise InfeasibleInstance(None, "empty PM pool")
    total = sum(pool.cm_units(r) for r in instance.requests)
    bound_units = Fraction(total, m * k)
    bound = bound_units / pool.denominator

    items: list[VmRequest] = []
    for r in instance.requests:
        if pool.cm_units(r) >= bound_units:
            lengths = segment_lengths_by_bound(r, bound)
            if len(lengths) > 1:
                items.extend(run.split(r, lengths))
                continue
        items.append(r)

    items.sort(key=lambda r: (-pool.cm_units(r), r.origin_id, r.start_slot))
    for item in items:
        run.place_min(item)
    return run.outcome()


class PrepartitionOn1(OnlineScheduler):
    """Online Prepartition driven by the dynamic balance value.

    ``B_d = min(max arrived CM / 2, sum arrived CM / m)``; a due item whose
    CM exceeds ``B_d/k`` is cut into segments that return to the queue and
    are each placed when their start slot comes up.
    """

    def __init__(self, instance, cfg=None):
        super().__init__(instance, cfg)
        self.k = 4 if cfg is None else cfg.k
        if self.k < 1:
            raise InvalidK(f"k must be a positive integer, got {self.k!r}")
        self.bounds_at_split: dict[int, Fraction] = {}

    def balance_units(self, clock) -> Fraction:
        stats = clock.stats
        m = len(self.run.pool)
        return min(Fraction(stats.max_units, 2), Fraction(stats.sum_units, m))

    def dispatch(self, item, clock):
        pool = self.run.pool
        bound_units = self.balance_units(clock) / self.k
        if item.duration_slots > 1 and pool.cm_units(item) > bound_units:
            bound = bound_units / pool.denominator
            pieces = self.run.split(item, segment_lengths_by_bound(item, bound),
                                    clock.current_slot)
            for p in pieces:
                self.bounds_at_split[p.id] = bound
            return pieces
        self.run.place_min(item, clock.current_slot)
        return []


class PrepartitionOn2(OnlineScheduler):
    """Online Prepartition with a load-ratio tolerance and a per-PM CM budget.

    The least-loaded feasible PM is the tentative target. If taking the
    request would push it above ``(1+f)`` times the new minimum over the
    PMs turned on (those already hosting work, plus the target), or above
    the CM budget, the request is cut into one equal segment per PM turned
    on and the segments go to those PMs in ascending CM order. A request
    that no single PM can hold for its whole interval is cut the same way.
    """

    def __init__(self, instance, cfg=None):
        super().__init__(instance, cfg)
        cfg = cfg or SchedulerConfig("PrepartitionOn2")
        self.f = cfg.f
        self.cm_bound = cfg.effective_cm_bound(instance)
        self.bound_units = self.cm_bound * self.run.pool.denominator

    def turned_on(self, item, target):
        return [pm for pm in self.run.pool.group(item) if pm.assigned or pm is target]

    def dispatch(self, item, clock):
        run = self.run
        pool = run.pool
        slot = clock.current_slot
        target = pool.pick_min(item)
        on = self.turned_on(item, target)
        if target is not None:
            after = target.cm_units + pool.cm_units(item)
            new_min = min([after] + [pm.cm_units for pm in on if pm is not target])
            overloaded = after > (1 + self.f) * new_min or after > self.bound_units
            if not overloaded:
                run.assign(target, item, slot)
                return []

        # overloaded, or no single PM has room for the whole interval
        parts = min(len(on), item.duration_slots)
        if parts < 2:
            # nothing to cut: one PM turned on, or a single-slot request
            if target is None:
                self._place_anywhere(item, slot)
            else:
                run.assign(target, item, slot, action="force")
            return []
        order = sorted(on, key=lambda pm: (pm.cm_units, pm.pm_id))
        pieces = run.split(item, equal_segment_lengths(item.duration_slots, parts), slot)
        used = set()
        for piece, preferred in zip(pieces, order):
            if preferred.pm_id not in used and self._takes(preferred, piece):
                pm = preferred
            else:
                pm = next((o for o in order if o.pm_id not in used and self._takes(o, piece)),
                          None)
            if pm is not None:
                used.add(pm.pm_id)
                run.assign(pm, piece, slot)
            else:
                self._place_anywhere(piece, slot)
        return []

    def _takes(self, pm, piece) -> bool:
        return (pm.fits(piece)
                and pm.cm_units + self.run.pool.cm_units(piece) <= self.bound_units)

    def _place_anywhere(self, piece, slot):
        """Least-loaded PM that fits, within budget if possible.

        Over budget everywhere: least-loaded PM that fits, logged as
        ``force``. Nowhere to fit: halve the piece and retry.
        """
        pool = self.run.pool
        pm = pool.pick_min(piece, accept=lambda o: self._takes(o, piece))
        if pm is not None:
            self.run.assign(pm, piece, slot)
            return
        pm = pool.pick_min(piece)
        if pm is not None:
            self.run.assign(pm, piece, slot, action="force")
            return
        if piece.duration_slots < 2:
            raise InfeasibleInstance(piece.id)
        for half in self.run.split(piece, equal_segment_lengths(piece.duration_slots, 2), slot):
            self._place_anywhere(half, slot)
