from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vmbalance.errors import CapacityExceeded, FamilyMismatch, NotAssigned
from vmbalance.model import (
    CATALOG_FRACTIONS, PM_CATALOG, VM_CATALOG, Decision, PmState, SlotConfig, VmRequest,
    VmType, capacity_units, common_denominator, remove, request_capacity_makespan, try_place,
)


def req(i, start, end, d, vm_type=None):
    return VmRequest(i, start, end, Fraction(d), vm_type)


def empty_pm(horizon=40, pm_type=1):
    return PmState(0, PM_CATALOG[pm_type], horizon)


# -- catalog values --------------------------------------------------------

def test_pm_catalog_matches_table():
    assert (PM_CATALOG[1].compute_units, PM_CATALOG[1].memory_gb, PM_CATALOG[1].storage_gb) == (16, 30, 3380)
    assert (PM_CATALOG[2].compute_units, PM_CATALOG[2].memory_gb, PM_CATALOG[2].storage_gb) == (52, 136.8, 3380)
    assert (PM_CATALOG[3].compute_units, PM_CATALOG[3].memory_gb, PM_CATALOG[3].storage_gb) == (40, 14, 3380)


@pytest.mark.parametrize("vm_type, family, fraction", [
    (VmType.T1_1, 1, Fraction(1, 16)), (VmType.T1_2, 1, Fraction(1, 4)),
    (VmType.T1_3, 1, Fraction(1, 2)), (VmType.T2_1, 2, Fraction(1, 8)),
    (VmType.T2_2, 2, Fraction(1, 4)), (VmType.T2_3, 2, Fraction(1, 2)),
    (VmType.T3_1, 3, Fraction(1, 8)), (VmType.T3_2, 3, Fraction(1, 2)),
])
def test_vm_catalog_fractions(vm_type, family, fraction):
    assert vm_type.family == family
    assert vm_type.fraction == fraction
    assert VM_CATALOG[vm_type].family == family


def test_catalog_fractions_are_the_four_sizes():
    assert set(CATALOG_FRACTIONS) == {Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(1, 2)}


# -- VmRequest -------------------------------------------------------------

@pytest.mark.parametrize("d, start, end, cm", [
    ("1/4", 0, 12, 3), ("1/2", 5, 7, 1), ("1/16", 100, 388, 18),
])
def test_request_capacity_makespan(d, start, end, cm):
    assert request_capacity_makespan(req(0, start, end, d)) == cm


@pytest.mark.parametrize("start, end, d", [
    (5, 5, "1/2"), (6, 5, "1/2"), (-1, 3, "1/2"), (0, 3, "0"), (0, 3, "3/2"),
])
def test_request_invariants_rejected(start, end, d):
    with pytest.raises(ValueError):
        req(0, start, end, d)


def test_request_defaults():
    r = req(7, 2, 9, "1/8", VmType.T2_1)
    assert r.origin_id == 7
    assert r.duration_slots == 7
    assert r.pm_family == 2
    assert r.arrival == 2
    assert req(1, 0, 1, "1/3").pm_family is None


def test_slot_config_validation():
    assert SlotConfig().slots_per_day == 288
    with pytest.raises(ValueError):
        SlotConfig(0, 10)
    with pytest.raises(ValueError):
        SlotConfig(5, 0)


def test_capacity_units_exact():
    assert capacity_units(Fraction(1, 16), 16) == 1
    assert capacity_units(Fraction(1, 2), 48) == 24
    with pytest.raises(ValueError):
        capacity_units(Fraction(1, 3), 16)
    assert common_denominator([Fraction(1, 16), Fraction(1, 3)]) == 48


# -- try_place / remove ----------------------------------------------------

def test_place_on_empty_pm():
    pm = empty_pm()
    r = req(1, 3, 8, "1/2")
    try_place(pm, r)
    assert [pm.committed_fraction(s) for s in range(3, 8)] == [Fraction(1, 2)] * 5
    assert pm.committed_fraction(2) == 0 and pm.committed_fraction(8) == 0
    assert pm.capacity_makespan == Fraction(5, 2)
    assert 1 in pm.assigned


def test_place_over_capacity_raises_and_leaves_pm_untouched():
    pm = empty_pm()
    try_place(pm, req(1, 3, 4, "1/2"))
    try_place(pm, req(2, 3, 4, "1/4"))
    before = pm.copy()
    with pytest.raises(CapacityExceeded):
        try_place(pm, req(3, 0, 10, "1/2"))
    assert pm == before


def test_disjoint_intervals_share_pm():
    pm = empty_pm()
    try_place(pm, req(1, 0, 10, "1/2"))
    try_place(pm, req(2, 10, 20, "1/2"))
    try_place(pm, req(3, 0, 20, "1/2"))
    assert pm.committed.max() == pm.denominator


def test_exactly_full_pm_is_feasible():
    pm = empty_pm()
    for i, d in enumerate(["1/2", "1/4", "1/8", "1/16", "1/16"]):
        try_place(pm, req(i, 0, 5, d))
    assert pm.committed_fraction(0) == 1
    assert not pm.fits(req(9, 4, 6, "1/16"))


def test_family_mismatch():
    pm = empty_pm(pm_type=1)
    with pytest.raises(FamilyMismatch):
        try_place(pm, req(1, 0, 3, "1/8", VmType.T2_1))
    try_place(pm, req(2, 0, 3, "1/16", VmType.T1_1))


def test_place_then_remove_is_identity():
    pm = empty_pm()
    try_place(pm, req(1, 0, 4, "1/4"))
    before = pm.copy()
    try_place(pm, req(2, 2, 9, "1/2"))
    remove(pm, 2)
    assert pm == before


def test_remove_unknown_raises():
    with pytest.raises(NotAssigned):
        remove(empty_pm(), 42)


def test_remove_overlapping_equals_rebuild():
    pm = empty_pm()
    r1, r2 = req(1, 0, 10, "1/4"), req(2, 5, 15, "1/2")
    try_place(pm, r1)
    try_place(pm, r2)
    remove(pm, 1)
    rebuilt = empty_pm()
    try_place(rebuilt, r2)
    assert pm == rebuilt


def test_decision_json():
    d = Decision(5, 3, 1, 12, "split")
    assert d.to_json() == {"slot": 12, "request_id": 5, "origin_id": 3, "pm_id": 1,
                           "action": "split"}
    assert Decision(5, 5, 2, None, "migrate", from_pm=0).to_json()["from_pm"] == 0


# -- properties --------------------------------------------------------------

fractions = st.sampled_from(sorted(set(CATALOG_FRACTIONS)))
ops = st.lists(st.tuples(st.integers(0, 30), st.integers(1, 10), fractions, st.booleans()),
               max_size=40)


@given(ops)
def test_capacity_and_cm_bookkeeping(ops):
    pm = empty_pm(horizon=40)
    for i, (start, dur, d, drop) in enumerate(ops):
        r = VmRequest(i, start, start + dur, d)
        if pm.fits(r):
            try_place(pm, r)
        else:
            with pytest.raises(CapacityExceeded):
                try_place(pm, r)
        if drop and pm.assigned:
            remove(pm, min(pm.assigned))
        assert 0 <= pm.committed.min() and pm.committed.max() <= pm.denominator
        assert pm.capacity_makespan == sum(
            (request_capacity_makespan(x) for x in pm.assigned.values()), Fraction(0))
    slots = np.zeros(40, dtype=np.int64)
    for x in pm.assigned.values():
        slots[x.start_slot:x.end_slot] += int(x.capacity_fraction * 16)
    assert np.array_equal(slots, pm.committed)
