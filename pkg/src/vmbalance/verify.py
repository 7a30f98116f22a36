"""Random small-instance suites that check Prepartition's guarantees against the oracle.

Instances are kept light: the summed demand of all requests stays within
one PM's capacity at every slot, so capacity never decides where a request
goes and the load bounds are the only thing under test.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import BoundViolated, InvalidParams
from .metrics import cm_max
from .model import CATALOG_FRACTIONS, PM_CATALOG, SlotConfig, VmRequest
from .oracle import lower_bound_p0, solve_exact
from .schedulers import SchedulerConfig, run_algorithm
from .workload import WorkloadInstance, generate_small_instance, instance_to_json

SMALL_FRACTIONS = tuple(sorted(set(CATALOG_FRACTIONS)))
MAX_DURATION = 20
MAX_START = 40
SUITE_ALGORITHMS = ("PrepartitionOff", "PrepartitionOn1", "PrepartitionOn2")


def peak_demand(instance: WorkloadInstance) -> Fraction:
    den = instance.capacity_denominator
    load = np.zeros(instance.horizon + 1, dtype=np.int64)
    for r in instance.requests:
        load[r.start_slot:r.end_slot] += int(r.capacity_fraction * den)
    return Fraction(int(load.max()), den)


def is_light(instance: WorkloadInstance) -> bool:
    return peak_demand(instance) <= 1


def is_divisible(instance: WorkloadInstance, k: int) -> bool:
    """True if every request cut at ``P0/k`` splits into whole, full segments."""
    bound = lower_bound_p0(instance) / k
    for r in instance.requests:
        cm = r.capacity_makespan
        if cm >= bound:
            if (bound / r.capacity_fraction).denominator != 1 or (cm / bound).denominator != 1:
                return False
    return True


def light_instance(seed: int, n_max: int = 8, m_choices=(2, 3)) -> WorkloadInstance:
    """A light random instance; ``n`` and ``m`` are drawn from the seed."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.choice(m_choices))
    for attempt in range(1000):
        inst = generate_small_instance(seed * 1000 + attempt, n, m, MAX_DURATION,
                                       SMALL_FRACTIONS, MAX_START)
        if is_light(inst):
            inst.provenance = {"kind": "light", "seed": seed, "n": n, "m": m}
            return inst
    raise InvalidParams(f"no light instance found for seed {seed}")


def _pick_request(rng, bound: Fraction, budget: Fraction, long: bool):
    """(fraction, duration) with CM a multiple of ``bound`` (long) or below it."""
    options = []
    for d in SMALL_FRACTIONS:
        for dur in range(1, MAX_DURATION + 1):
            cm = d * dur
            if cm > budget:
                break
            if long and (cm / bound).denominator == 1:
                options.append((d, dur))
            elif not long and cm < bound:
                options.append((d, dur))
    if not options:
        return None
    return options[int(rng.integers(0, len(options)))]


def divisible_instance(seed: int, k: int, n_max: int = 8, m_choices=(2, 3)) -> WorkloadInstance:
    """A light instance built so that ``P0/k`` is a half-integer ``B`` and every
    request either has CM below ``B`` or a whole multiple of it."""
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        m = int(rng.choice(m_choices))
        bound = Fraction(int(rng.integers(1, 4)), 2)
        left = m * k * bound
        shapes = []
        while left > 0 and len(shapes) < n_max:
            if len(shapes) == n_max - 1:
                exact = [(d, int(left / d)) for d in SMALL_FRACTIONS
                         if (left / d).denominator == 1 and left / d <= MAX_DURATION
                         and (left < bound or (left / bound).denominator == 1)]
                if not exact:
                    break
                shapes.append(exact[-1])
                left = Fraction(0)
                break
            pick = _pick_request(rng, bound, left, bool(rng.random() < 0.4))
            if pick is None:
                pick = _pick_request(rng, bound, left, True) or _pick_request(rng, bound, left, False)
            if pick is None:
                break
            shapes.append(pick)
            left -= pick[0] * pick[1]
        if left != 0:
            continue
        for _ in range(50):
            requests = []
            for i, (d, dur) in enumerate(shapes):
                start = int(rng.integers(0, MAX_START + 1))
                requests.append(VmRequest(i, start, start + dur, d))
            horizon = max(r.end_slot for r in requests) + 1
            inst = WorkloadInstance(requests, [PM_CATALOG[1]] * m, SlotConfig(5, horizon),
                                    {"kind": "divisible", "seed": seed, "k": k})
            if is_light(inst):
                return inst
    raise InvalidParams(f"no divisible instance found for seed {seed}")


def ratio_bound(algorithm: str, opt: Fraction, m: int, k: int = 4,
                f: Fraction = Fraction(1, 8), slack: Fraction = Fraction(0)) -> Fraction:
    if algorithm == "PrepartitionOff":
        return (1 + Fraction(1, k)) * opt + slack
    if algorithm == "PrepartitionOn1":
        return (1 + Fraction(1, k) - Fraction(1, m * k)) * opt + slack
    if algorithm == "PrepartitionOn2":
        return (1 + f) * opt + slack
    raise InvalidParams(f"no ratio bound for {algorithm}")


@dataclass
class SuiteReport:
    algorithm: str
    checked: int = 0
    worst_ratio: Fraction = Fraction(0)
    worst_seed: Optional[int] = None
    violations: list = field(default_factory=list)  # (seed, instance json, detail)

    @property
    def passed(self) -> bool:
        return not self.violations


def run_suite(algorithm: str, n_instances: int = 50, k: int = 4,
              f: Fraction = Fraction(1, 8), seed: int = 0, divisible: bool = False,
              cm_bound: Optional[Fraction] = None) -> SuiteReport:
    """Check one algorithm on ``n_instances`` seeded instances.

    Off and On1 are held to their ratio bounds, with one slot of the largest
    demand as slack unless the instances are divisible. On2 is held to its
    per-PM CM budget whenever no placement had to be forced past it.
    """
    if algorithm not in SUITE_ALGORITHMS:
        raise InvalidParams(f"no suite for {algorithm}")
    report = SuiteReport(algorithm)
    for i in range(n_instances):
        s = seed + i
        inst = divisible_instance(s, k) if divisible else light_instance(s)
        cfg = SchedulerConfig(algorithm, k=k, f=f, cm_bound=cm_bound, seed=s)
        outcome = run_algorithm(inst, cfg)
        got = cm_max(outcome.schedule)
        opt = solve_exact(inst).opt_cm_max
        report.checked += 1
        ratio = got / opt if opt else Fraction(1)
        if ratio > report.worst_ratio:
            report.worst_ratio, report.worst_seed = ratio, s
        if algorithm == "PrepartitionOn2":
            budget = cfg.effective_cm_bound(inst)
            forced = any(d.action == "force" for d in outcome.decisions_log)
            over = [pm.pm_id for pm in outcome.schedule.pm_states
                    if pm.capacity_makespan > budget]
            if over and not forced:
                report.violations.append((s, instance_to_json(inst),
                                          f"PMs {over} exceed CM budget {budget}"))
            continue
        slack = Fraction(0) if divisible else max(r.capacity_fraction for r in inst.requests)
        limit = ratio_bound(algorithm, opt, inst.n_pms, k, f, slack)
        if got > limit:
            report.violations.append((s, instance_to_json(inst),
                                      f"cm_max {got} > bound {limit} (OPT {opt})"))
    return report


def raise_on_violation(report: SuiteReport):
    if report.violations:
        seed, doc, detail = report.violations[0]
        raise BoundViolated(f"{report.algorithm} seed {seed}: {detail}", doc)
