import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from reference import RefPm, ref_imd, ref_report
from vmbalance.errors import EmptySchedule, EmptyWindow, NoActivePms
from vmbalance.metrics import (
    average_utilization, cm_max, common_window, imbalance_degree,
    imbalance_from_utilizations, imbalance_series, makespan, pm_utilization,
)
from vmbalance.model import CATALOG_FRACTIONS, PM_CATALOG, PmState, Schedule, VmRequest


def schedule_of(placements, n_pms, horizon=60):
    """Schedule from ``[(pm_index, VmRequest), ...]``."""
    pms = [PmState(i, PM_CATALOG[1], horizon) for i in range(n_pms)]
    for i, r in placements:
        pms[i].place(r)
    reqs = {r.id: r for _, r in placements}
    return Schedule(reqs, reqs, {r.id: i for i, r in placements},
                    {r.id: [r.id] for _, r in placements}, pms)


def r(i, start, end, d):
    return VmRequest(i, start, end, Fraction(d))


def test_utilization_full_window():
    s = schedule_of([(0, r(0, 0, 10, "1/2")), (0, r(1, 0, 10, "1/2"))], 1)
    assert pm_utilization(s.pm(0), (0, 10)) == 1


def test_utilization_half_loaded_half_window():
    s = schedule_of([(0, r(0, 0, 5, "1/2"))], 1)
    assert pm_utilization(s.pm(0), (0, 10)) == Fraction(1, 4)


def test_utilization_matches_slot_sum():
    reqs = [r(0, 2, 12, "1/4"), r(1, 5, 20, "1/8"), r(2, 0, 9, "1/2")]
    s = schedule_of([(0, x) for x in reqs], 1)
    slots = [sum((x.capacity_fraction for x in reqs if x.start_slot <= t < x.end_slot), Fraction(0))
             for t in range(20)]
    assert pm_utilization(s.pm(0), (0, 20)) == sum(slots) / 20
    # default window is the PM's own busy span, here also [0, 20)
    assert pm_utilization(s.pm(0)) == sum(slots) / 20


def test_utilization_window_errors():
    s = schedule_of([(0, r(0, 0, 5, "1/2"))], 1, horizon=10)
    with pytest.raises(EmptyWindow):
        pm_utilization(s.pm(0), (4, 4))
    with pytest.raises(EmptyWindow):
        pm_utilization(s.pm(0), (0, 11))


def test_imd_identical_utilizations_is_zero():
    assert imbalance_from_utilizations([Fraction(3, 10)] * 4) == 0


def test_imd_two_pms():
    assert imbalance_from_utilizations([Fraction(1, 5), Fraction(4, 5)]) == pytest.approx(0.09, abs=1e-15)


def test_imd_requires_pms():
    with pytest.raises(NoActivePms):
        imbalance_from_utilizations([])
    with pytest.raises(NoActivePms):
        imbalance_degree([PmState(0, PM_CATALOG[1], 5)])


def test_imd_five_mixed_pms_matches_reference():
    rng = random.Random(5)
    placements = []
    ref = [RefPm(1, 60) for _ in range(5)]
    for i in range(25):
        start = rng.randrange(0, 40)
        x = r(i, start, start + rng.randrange(1, 20), rng.choice(CATALOG_FRACTIONS))
        for p in rng.sample(range(5), 5):
            if ref[p].fits(x):
                ref[p].add(x)
                placements.append((p, x))
                break
    s = schedule_of(placements, 5)
    util, imd, span, top = ref_report(ref)
    assert imbalance_degree(s.pm_states) == float(imd)
    assert average_utilization(s.pm_states) == float(util)
    assert makespan(s) == span
    assert cm_max(s) == top


def test_idle_pms_are_excluded():
    s = schedule_of([(0, r(0, 0, 10, "1/2")), (1, r(1, 0, 10, "1/2"))], 3)
    assert imbalance_degree(s.pm_states) == 0
    assert average_utilization(s.pm_states) == 0.5


def test_common_window_spans_all_active_pms():
    s = schedule_of([(0, r(0, 0, 10, "1/2")), (1, r(1, 10, 20, "1/2"))], 2)
    assert common_window(s.pm_states) == (0, 20)
    # each PM is busy half of the common window
    assert average_utilization(s.pm_states) == 0.25
    assert imbalance_degree(s.pm_states) == 0


def test_makespan_single_request():
    assert makespan(schedule_of([(0, r(0, 3, 10, "1/4"))], 1)) == 7


def test_makespan_is_per_pm_maximum():
    s = schedule_of([(0, r(0, 0, 10, "1/4")), (1, r(1, 2, 20, "1/4"))], 2)
    assert makespan(s) == 18


def test_makespan_empty():
    with pytest.raises(EmptySchedule):
        makespan(schedule_of([], 2))


def test_cm_max_examples():
    s = schedule_of([(0, r(0, 0, 6, "1/2")), (1, r(1, 0, 10, "1/2")), (2, r(2, 0, 4, "1/2"))], 3)
    assert cm_max(s) == 5
    assert cm_max(schedule_of([], 1)) == 0


def test_series_identical_loads_all_zero():
    s = schedule_of([(0, r(0, 0, 30, "1/2")), (1, r(1, 0, 30, "1/2"))], 2)
    assert all(v == 0 for _, v in imbalance_series(s, 7))


def test_series_single_pm_all_zero():
    s = schedule_of([(0, r(0, 0, 30, "1/2")), (0, r(1, 10, 50, "1/4"))], 1)
    series = imbalance_series(s, 10)
    assert [t for t, _ in series] == [10, 20, 30, 40, 50]
    assert all(v == 0 for _, v in series)


def test_series_matches_prefix_recomputation():
    from vmbalance import SchedulerConfig, SyntheticParams, generate_synthetic, run_algorithm
    inst = generate_synthetic(SyntheticParams(1000, seed=2))
    sched = run_algorithm(inst, SchedulerConfig("LPT")).schedule
    series = dict(imbalance_series(sched, 288))
    active = sched.active_pms()
    first = common_window(active)[0]
    for t in random.Random(0).sample(sorted(series), 3):
        utils = [Fraction(int(pm.committed[first:t].sum()), pm.denominator * (t - first))
                 for pm in active if pm.busy_span()[0] < t]
        assert series[t] == float(ref_imd(utils))


def test_series_last_sample_is_schedule_end():
    s = schedule_of([(0, r(0, 0, 25, "1/2")), (1, r(1, 3, 9, "1/4"))], 2)
    series = imbalance_series(s, 10)
    assert series[-1][0] == 25
    assert series[-1][1] == imbalance_degree(s.pm_states)
    with pytest.raises(ValueError):
        imbalance_series(s, 0)


# -- properties ----------------------------------------------------------------

placements = st.lists(
    st.tuples(st.integers(0, 3), st.integers(0, 40), st.integers(1, 19),
              st.sampled_from(sorted(set(CATALOG_FRACTIONS)))),
    min_size=1, max_size=30)


def build(items):
    pms = [PmState(i, PM_CATALOG[1], 60) for i in range(4)]
    placed = []
    for n, (p, start, dur, d) in enumerate(items):
        x = VmRequest(n, start, start + dur, d)
        if pms[p].fits(x):
            pms[p].place(x)
            placed.append((p, x))
    reqs = {x.id: x for _, x in placed}
    return Schedule(reqs, reqs, {x.id: p for p, x in placed}, {i: [i] for i in reqs}, pms)


@given(placements)
def test_metric_invariants(items):
    s = build(items)
    active = s.active_pms()
    imd = imbalance_degree(s.pm_states)
    assert imd >= 0
    for pm in active:
        assert pm_utilization(pm) <= 1
    utils = [pm_utilization(pm, common_window(active)) for pm in active]
    assert (imd == 0) == (len(set(utils)) == 1)
    assert imd == float(ref_imd(utils))


@given(placements, st.randoms(use_true_random=False))
def test_cm_max_invariant_under_pm_permutation(items, rnd):
    s = build(items)
    perm = list(s.pm_states)
    rnd.shuffle(perm)
    shuffled = Schedule(s.origins, s.requests, s.assignments, s.segments, perm)
    assert cm_max(shuffled) == cm_max(s)


@given(placements, st.integers(0, 59), st.sampled_from(sorted(set(CATALOG_FRACTIONS))))
def test_adding_to_max_pm_never_lowers_cm_max(items, start, d):
    s = build(items)
    before = cm_max(s)
    top = max(s.pm_states, key=lambda pm: pm.capacity_makespan)
    x = VmRequest(10_000, start, start + 1, d)
    if top.fits(x):
        top.place(x)
        assert cm_max(s) >= before
