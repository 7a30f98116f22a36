from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from reference import brute_force_opt
from vmbalance.errors import Infeasible, TooLarge
from vmbalance.model import PM_CATALOG, SlotConfig, VmRequest, VmType
from vmbalance.oracle import lower_bound_p0, solve_exact
from vmbalance.workload import WorkloadInstance, generate_small_instance


def inst_of(specs, m):
    reqs = [VmRequest(i, s, e, Fraction(d)) for i, (s, e, d) in enumerate(specs)]
    horizon = max((r.end_slot for r in reqs), default=0) + 1
    return WorkloadInstance(reqs, [PM_CATALOG[1]] * m, SlotConfig(5, horizon))


def test_two_equal_requests_split_across_pms():
    res = solve_exact(inst_of([(0, 4, "1/2"), (0, 4, "1/2")], 2))
    assert res.opt_cm_max == 2
    assert sorted(res.witness.values()) == [0, 1]


def test_partition_example():
    # CMs 3, 3, 2, 2, 2 on two PMs: best split is {3, 3} / {2, 2, 2}
    specs = [(0, 6, "1/2"), (0, 6, "1/2"), (0, 4, "1/2"), (4, 8, "1/2"), (8, 12, "1/2")]
    assert solve_exact(inst_of(specs, 2)).opt_cm_max == 6


def test_capacity_forces_worse_balance():
    # three overlapping halves cannot share, so one PM takes two of them
    res = solve_exact(inst_of([(0, 2, "1/2")] * 3 + [(5, 9, "1/16")], 2))
    assert res.opt_cm_max == 2


def test_witness_reproduces_opt():
    inst = generate_small_instance(3, 8, 3)
    res = solve_exact(inst)
    loads = [Fraction(0)] * inst.n_pms
    for r in inst.requests:
        loads[res.witness[r.id]] += r.capacity_makespan
    assert max(loads) == res.opt_cm_max


def test_empty_instance():
    assert solve_exact(inst_of([], 2)).opt_cm_max == 0


def test_limits():
    with pytest.raises(TooLarge):
        solve_exact(generate_small_instance(0, 11, 2))
    with pytest.raises(TooLarge):
        solve_exact(generate_small_instance(0, 3, 5))
    assert solve_exact(generate_small_instance(0, 11, 2), limit=11).opt_cm_max > 0


def test_infeasible():
    with pytest.raises(Infeasible):
        solve_exact(inst_of([(0, 2, "1/2")] * 3, 1))
    with pytest.raises(Infeasible):
        solve_exact(inst_of([(0, 2, "1/2")], 0))
    typed = WorkloadInstance([VmRequest(0, 0, 2, Fraction(1, 8), VmType.T2_1)],
                             [PM_CATALOG[1]], SlotConfig(5, 3))
    with pytest.raises(Infeasible):
        solve_exact(typed)


def test_p0_examples():
    inst = inst_of([(0, 4, "1/2"), (0, 8, "1/4")], 2)
    assert lower_bound_p0(inst) == 2
    assert lower_bound_p0(inst, m=4) == 1
    with pytest.raises(ValueError):
        lower_bound_p0(inst, m=0)


@given(st.integers(0, 100_000), st.integers(1, 6), st.integers(1, 3))
def test_pruned_search_matches_brute_force(seed, n, m):
    inst = generate_small_instance(seed, n, m, max_duration=8)
    expected = brute_force_opt(inst)
    if expected is None:
        with pytest.raises(Infeasible):
            solve_exact(inst)
    else:
        res = solve_exact(inst)
        assert res.opt_cm_max == expected
        assert lower_bound_p0(inst) <= expected
        assert max(r.capacity_makespan for r in inst.requests) <= expected
