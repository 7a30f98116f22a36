"""vmbalance command line: generate, run, compare, verify, oracle.

Exit codes: 0 ok, 1 usage, 2 infeasible or bound violated, 3 IO or malformed input.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import metrics
from .engine import write_decisions
from .errors import (
    BoundViolated, EmptyTrace, Infeasible, InfeasibleInstance, InvalidConfig, InvalidK,
    InvalidParams, MalformedLine, TooLarge,
)
from .experiments import ExperimentSpec, k_or_f, label, run_experiment, write_reports
from .model import SlotConfig
from .oracle import lower_bound_p0, solve_exact
from .schedulers import ALGORITHMS, USES_K, SchedulerConfig, run_algorithm
from .verify import SUITE_ALGORITHMS, run_suite
from .workload import (
    SyntheticParams, default_pm_pool, dump_instance, generate_synthetic, load_instance,
    parse_proc_buckets, parse_trace,
)

OUTPUT_ENV = "VMBALANCE_OUTPUT_DIR"
EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 1, 2, 3

log = logging.getLogger("vmbalance")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "vmbalance-out"))


def fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def counts(text: str) -> tuple:
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated counts: {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated counts: {text!r}")
    return parts


def add_algorithm_flags(p):
    p.add_argument("--algorithm", "-a", required=True, choices=ALGORITHMS)
    p.add_argument("--k", type=int, help="partition value (PrepartitionOff/On1)")
    p.add_argument("--f", type=fraction, help="ratio tolerance (PrepartitionOn2)")
    p.add_argument("--cm-bound", type=fraction, help="per-PM CM budget (PrepartitionOn2)")
    p.add_argument("--pmg-factor", type=fraction, help="migration band (PMG)")
    p.add_argument("--seed", type=int, default=0)


def config_from_args(args) -> SchedulerConfig:
    alg = args.algorithm
    if args.k is not None and alg not in USES_K:
        raise UsageError(f"--k does not apply to {alg}")
    if (args.f is not None or args.cm_bound is not None) and alg != "PrepartitionOn2":
        raise UsageError(f"--f/--cm-bound do not apply to {alg}")
    if args.pmg_factor is not None and alg != "PMG":
        raise UsageError(f"--pmg-factor does not apply to {alg}")
    kw = {"seed": args.seed, "cm_bound": args.cm_bound}
    for name in ("k", "f", "pmg_factor"):
        if getattr(args, name) is not None:
            kw[name] = getattr(args, name)
    try:
        return SchedulerConfig(alg, **kw)
    except (InvalidConfig, InvalidK) as exc:
        raise UsageError(str(exc)) from None


def read_instance(args):
    path = Path(args.instance)
    if path.suffix == ".json":
        return load_instance(path)
    pool = default_pm_pool(args.pms) if args.pms else None
    buckets = parse_proc_buckets(args.proc_buckets) if args.proc_buckets else None
    kwargs = {"type_mapping": buckets} if buckets else {}
    return parse_trace(path, SlotConfig(args.slot_minutes), pm_pool=pool, **kwargs)


def cmd_generate(args) -> int:
    dist = tuple(args.types) if args.types else (0.125,) * 8
    params = SyntheticParams(args.n, args.mean, args.std, dist, args.seed, args.pms,
                             args.horizon, args.mode, args.slot_minutes)
    inst = generate_synthetic(params)
    out = Path(args.out) if args.out else default_output_dir() / f"synthetic-n{args.n}-s{args.seed}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    dump_instance(inst, out)
    print(out)
    return 0


def cmd_run(args) -> int:
    cfg = config_from_args(args)
    inst = read_instance(args)
    outcome = run_algorithm(inst, cfg)
    if args.no_timing:
        outcome.wall_time_ms = 0.0
    rep = metrics.report(outcome)
    row = rep.csv_row(cfg.algorithm, len(inst.requests), k_or_f(cfg))
    writer = csv.writer(sys.stdout, lineterminator="\n")
    if args.header:
        writer.writerow(metrics.CSV_COLUMNS)
    writer.writerow(row)
    if args.append:
        target = Path(args.append)
        fresh = not target.exists() or target.stat().st_size == 0
        with target.open("a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if fresh:
                w.writerow(metrics.CSV_COLUMNS)
            w.writerow(row)
    out = Path(args.out) if args.out else default_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{Path(args.instance).stem}_{label(cfg)}"
    write_decisions(outcome, out / f"{stem}_decisions.jsonl")
    with (out / f"{stem}_imd_series.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("slot", "imd"))
        for slot, value in metrics.imbalance_series(outcome.schedule, args.step):
            w.writerow((slot, repr(value)))
    return 0


def cmd_compare(args) -> int:
    doc = json.loads(Path(args.spec).read_text())
    if args.out:
        doc["outputs"] = args.out
    doc.setdefault("outputs", str(default_output_dir()))
    if args.repetitions is not None:
        doc["repetitions"] = args.repetitions
    if args.workers is not None:
        doc["workers"] = args.workers
    if args.no_timing:
        doc["timing"] = False
    try:
        spec = ExperimentSpec.from_json(doc)
    except (InvalidConfig, InvalidK, TypeError) as exc:
        raise UsageError(f"bad experiment spec: {exc}") from None
    results = run_experiment(spec)
    out = write_reports(spec, results)
    failed = [r for r in results if r.error]
    print(f"{len(results) - len(failed)}/{len(results)} runs ok; reports in {out}")
    for r in failed:
        print(f"FAILED {r.workload} {label(r.cfg)} rep {r.repetition}: {r.error}", file=sys.stderr)
    if not failed:
        return 0
    if any(r.error.startswith(("InfeasibleInstance", "Infeasible")) for r in failed):
        return EXIT_INFEASIBLE
    return EXIT_IO


def cmd_verify(args) -> int:
    if args.k is not None and args.algorithm not in USES_K:
        raise UsageError(f"--k does not apply to {args.algorithm}")
    if (args.f is not None or args.cm_bound is not None) and args.algorithm != "PrepartitionOn2":
        raise UsageError(f"--f/--cm-bound do not apply to {args.algorithm}")
    rep = run_suite(args.algorithm, args.instances, k=args.k or 4,
                    f=args.f or Fraction(1, 8), seed=args.seed,
                    divisible=args.divisible, cm_bound=args.cm_bound)
    print(f"{rep.algorithm}: {rep.checked} instances, worst ratio "
          f"{float(rep.worst_ratio):.6f} (seed {rep.worst_seed}), "
          f"{len(rep.violations)} violations")
    if rep.passed:
        return 0
    out = Path(args.out) if args.out else default_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    seed, doc, detail = rep.violations[0]
    path = out / f"counterexample_{rep.algorithm}_seed{seed}.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    print(f"bound violated: {detail}; counterexample written to {path}", file=sys.stderr)
    return EXIT_INFEASIBLE


def cmd_oracle(args) -> int:
    inst = read_instance(args)
    result = solve_exact(inst, args.limit)
    print(json.dumps({
        "opt_cm_max": str(result.opt_cm_max),
        "p0": str(lower_bound_p0(inst)),
        "explored": result.explored,
        "witness": {str(k): v for k, v in sorted(result.witness.items())},
    }, indent=1))
    return 0


def build_parser() -> Parser:
    parser = Parser(prog="vmbalance", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    g = sub.add_parser("generate", help="write a synthetic instance as JSON")
    g.add_argument("--n", type=int, required=True, help="number of VM requests")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mean", type=float, default=864, help="mean duration in slots")
    g.add_argument("--std", type=float, default=288, help="duration std in slots")
    g.add_argument("--types", type=float, nargs=8, metavar="P",
                   help="probabilities of the 8 VM types")
    g.add_argument("--pms", type=counts, help="PM counts per type, e.g. 7,8,5")
    g.add_argument("--horizon", type=int)
    g.add_argument("--mode", choices=("duration", "both"), default="duration")
    g.add_argument("--slot-minutes", type=int, default=5)
    g.add_argument("-o", "--out")
    g.set_defaults(func=cmd_generate)

    def instance_args(p):
        p.add_argument("instance", help="instance JSON, or an SWF trace")
        p.add_argument("--pms", type=counts, help="PM pool for traces (default 1,1,1)")
        p.add_argument("--slot-minutes", type=int, default=5)
        p.add_argument("--proc-buckets", help='trace processor buckets, e.g. "1:1/16,2:1/8"')

    r = sub.add_parser("run", help="run one algorithm and print a CSV row")
    instance_args(r)
    add_algorithm_flags(r)
    r.add_argument("--out", help="directory for decisions and IMD series")
    r.add_argument("--step", type=int, default=metrics.DEFAULT_SERIES_STEP,
                   help="IMD series sampling step in slots")
    r.add_argument("--append", help="also append the row to this CSV file")
    r.add_argument("--header", action="store_true", help="print the CSV header first")
    r.add_argument("--no-timing", action="store_true", help="report wall time as 0")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run an experiment spec")
    c.add_argument("spec", help="experiment spec JSON")
    c.add_argument("--out")
    c.add_argument("--repetitions", type=int)
    c.add_argument("--workers", type=int)
    c.add_argument("--no-timing", action="store_true")
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("verify", help="check ratio bounds on random small instances")
    v.add_argument("--algorithm", "-a", required=True, choices=SUITE_ALGORITHMS)
    v.add_argument("--k", type=int)
    v.add_argument("--f", type=fraction)
    v.add_argument("--cm-bound", type=fraction)
    v.add_argument("--instances", type=int, default=50)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--divisible", action="store_true",
                   help="use instances where P0/k cuts requests exactly (no slack)")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="exact optimum of a small instance")
    instance_args(o)
    o.add_argument("--limit", type=int, default=10)
    o.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, InvalidParams, TooLarge) as exc:
        print(f"vmbalance: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleInstance, Infeasible, BoundViolated) as exc:
        print(f"vmbalance: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, MalformedLine, EmptyTrace, json.JSONDecodeError, KeyError) as exc:
        print(f"vmbalance: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
