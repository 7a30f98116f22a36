"""Slow, direct re-implementations used as test oracles.

Nothing here imports the package's scheduling or metric code: loads are
per-slot lists of Fractions and every choice is a linear scan.
"""

import itertools
from fractions import Fraction


class RefPm:
    def __init__(self, pm_type, horizon):
        self.pm_type = pm_type
        self.load = [Fraction(0)] * horizon
        self.cm = Fraction(0)
        self.items = []

    def hosts(self, r):
        return r.vm_type is None or r.vm_type.family == self.pm_type

    def fits(self, r):
        return self.hosts(r) and all(self.load[s] + r.capacity_fraction <= 1
                                     for s in range(r.start_slot, r.end_slot))

    def add(self, r):
        for s in range(r.start_slot, r.end_slot):
            self.load[s] += r.capacity_fraction
        self.cm += r.capacity_fraction * (r.end_slot - r.start_slot)
        self.items.append(r)


def ref_pms(instance):
    return [RefPm(spec.pm_type, instance.horizon) for spec in instance.pm_pool]


def min_cm_fit(pms, r):
    best = None
    for i, pm in enumerate(pms):
        if pm.fits(r) and (best is None or pm.cm < pms[best].cm):
            best = i
    return best


def greedy(instance, order):
    pms = ref_pms(instance)
    for r in order:
        i = min_cm_fit(pms, r)
        assert i is not None, f"request {r.id} does not fit"
        pms[i].add(r)
    return pms


def ref_lpt(instance):
    """Longest duration first, then larger CM, then lower id; least-loaded PM."""
    order = sorted(instance.requests, key=lambda r: (
        -(r.end_slot - r.start_slot),
        -r.capacity_fraction * (r.end_slot - r.start_slot), r.id))
    return greedy(instance, order)


def ref_lpt_by_cm(instance):
    order = sorted(instance.requests, key=lambda r: (
        -r.capacity_fraction * (r.end_slot - r.start_slot), r.id, r.start_slot))
    return greedy(instance, order)


def ref_olrsa(instance):
    """Fold over the stream in start order, ties by id."""
    order = sorted(instance.requests, key=lambda r: (r.start_slot, r.id))
    return greedy(instance, order)


def ref_round_robin(instance):
    pms = ref_pms(instance)
    cursor = 0
    for r in instance.requests:
        for step in range(len(pms)):
            i = (cursor + step) % len(pms)
            if pms[i].fits(r):
                pms[i].add(r)
                cursor = i + 1
                break
        else:
            raise AssertionError(f"request {r.id} does not fit")
    return pms


def busy(pm):
    return (min(r.start_slot for r in pm.items), max(r.end_slot for r in pm.items))


def ref_report(pms):
    """(avg utilization, IMD, makespan, cm_max) as exact Fractions."""
    active = [pm for pm in pms if pm.items]
    lo = min(busy(pm)[0] for pm in active)
    hi = max(busy(pm)[1] for pm in active)
    utils = [sum(pm.load[lo:hi]) / (hi - lo) for pm in active]
    m = len(utils)
    mean = sum(utils) / m
    # the explicit three-dimension formula with all three dimensions equal
    imd = sum(3 * (u - mean) ** 2 / 3 for u in utils) / m
    makespan = max(busy(pm)[1] - busy(pm)[0] for pm in active)
    return mean, imd, makespan, max(pm.cm for pm in pms)


def brute_force_opt(instance):
    """Minimum cm_max over all m**n assignments, no pruning at all."""
    best = None
    m = instance.n_pms
    for assignment in itertools.product(range(m), repeat=len(instance.requests)):
        pms = ref_pms(instance)
        ok = True
        for r, i in zip(instance.requests, assignment):
            if not pms[i].fits(r):
                ok = False
                break
            pms[i].add(r)
        if ok:
            value = max(pm.cm for pm in pms)
            if best is None or value < best:
                best = value
    return best


def ref_imd(utils):
    utils = [Fraction(u) for u in utils]
    m = len(utils)
    mean = sum(utils) / m
    return sum((u - mean) ** 2 for u in utils) / m
