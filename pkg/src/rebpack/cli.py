"""Command-line interface: ``rebpack <group> <command> ...``.

Exit codes: 0 success, 2 usage, 3 input/parse error, 4 model error,
5 solver error, 6 iteration or time limit reached. Errors are printed as
``error: <Category>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from rebpack import errors as E
from rebpack.instances import (
    CK_RANGES,
    EXPERIMENTS,
    CkGenSpec,
    RebpGenSpec,
    format_instance,
    gen_ck,
    gen_rebp,
    instance_path,
    read_instance,
    read_schedule,
    write_instance,
)
from rebpack.knapsack import brute_force_ck, export_sos2, solve_dp, solve_fptas
from rebpack.master import CUT_CHOICES
from rebpack.model import CkInstance, RebpInstance, as_rational, assignment_matrix, open_bins_of
from rebpack.oracles import enumerate_uomega_vertices, robust_brute_force
from rebpack.rcg import RcgConfig, solve_rebp
from rebpack.separation import separate

SOLVER_ENV = "REBPACK_SOLVER"

EXIT_INPUT, EXIT_MODEL, EXIT_SOLVER, EXIT_LIMIT = 3, 4, 5, 6

_INPUT_ERRORS = (E.ParseError, E.InstanceError, E.BadSpec)
_SOLVER_ERRORS = (E.SolverNotFound, E.SolverFailed, E.SolverReportedInfeasible,
                  E.MasterInfeasible, E.TooLargeForInternal, E.TooLarge, E.ProfitBoundOverflow)


def q(v) -> str:
    v = as_rational(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _rational_list(text: str) -> tuple[Fraction, ...]:
    return tuple(_rational(t) for t in text.replace(",", " ").split())


def _cuts(text: str) -> str:
    if text not in CUT_CHOICES + ("auto",):
        raise argparse.ArgumentTypeError(f"cuts must be one of auto, {', '.join(CUT_CHOICES)}")
    return text


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--time-limit", type=float, default=None, help="seconds")
    g.add_argument("--tau0", type=_rational, default=Fraction(1, 5))
    g.add_argument("--tau1", type=_rational, default=Fraction(1, 20))
    g.add_argument("--epsilon", type=_rational, default=Fraction(1, 10))
    g.add_argument("--cuts", type=_cuts, default="auto")
    g.add_argument("--solver", default="internal",
                   help=f"internal | external:<cmd> | external (command from ${SOLVER_ENV})")
    g.add_argument("--threads", type=int, default=1)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="rebpack", description=__doc__.splitlines()[0])
    groups = ap.add_subparsers(dest="group", required=True)

    def leaf(sub, name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    ck = groups.add_parser("ck", help="two-piece convex knapsack").add_subparsers(
        dest="command", required=True)
    p = leaf(ck, "solve", cmd_ck_solve, "exact dynamic program")
    p.add_argument("instance")
    p = leaf(ck, "fptas", cmd_ck_fptas, "scaling-and-rounding approximation")
    p.add_argument("instance")
    p = leaf(ck, "oracle", cmd_ck_oracle, "brute-force enumeration")
    p.add_argument("instance")
    p = leaf(ck, "export-sos2", cmd_ck_export, "write the SOS-2 MILP as an LP file")
    p.add_argument("instance")
    p.add_argument("-o", "--output", required=True)

    rb = groups.add_parser("rebp", help="robust extensible bin packing").add_subparsers(
        dest="command", required=True)
    p = leaf(rb, "solve", cmd_rebp_solve, "row-and-column generation")
    p.add_argument("instance")
    p.add_argument("--trace", help="write the iteration trace as CSV")
    p.add_argument("--report", help="write the schedule report as JSON")
    p.add_argument("--separation", choices=("fptas", "exact"), default="fptas")
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("-v", "--verbose", action="store_true")
    p = leaf(rb, "oracle", cmd_rebp_oracle, "exhaustive robust optimum (small instances)")
    p.add_argument("instance")
    p = leaf(rb, "separate", cmd_rebp_separate, "worst case for a fixed schedule")
    p.add_argument("instance")
    p.add_argument("schedule")
    p.add_argument("--mode", choices=("exact", "fptas"), default="exact")

    gen = groups.add_parser("gen", help="benchmark generators").add_subparsers(
        dest="command", required=True)
    p = leaf(gen, "ck", cmd_gen_ck, "random knapsack instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--R", type=int, default=100)
    p.add_argument("--experiment", "-i", type=int, default=1)
    _outputs(p)
    p = leaf(gen, "rebp", cmd_gen_rebp, "bin packing instance from nominal durations")
    p.add_argument("--nominal", type=_rational_list, help="comma separated durations")
    p.add_argument("--m", type=int, help="number of synthetic items")
    p.add_argument("--a-max", type=int, default=20)
    p.add_argument("--bins", type=int)
    p.add_argument("--deviation-ratio", type=_rational, default=Fraction(2, 5))
    p.add_argument("--capacity-divisor", type=_rational, default=Fraction(8))
    p.add_argument("--budget-ratio", type=_rational, default=Fraction(1, 10))
    p.add_argument("--cost-factor", type=_rational, default=Fraction(3, 2))
    p.add_argument("--name", default="")
    _outputs(p)

    bench = groups.add_parser("bench", help="benchmark sweeps (CSV on stdout)").add_subparsers(
        dest="command", required=True)
    p = leaf(bench, "ck", cmd_bench_ck, "DP over R and the 30 budget levels")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--R", type=int, action="append", help="repeatable; default all three")
    p.add_argument("--instances", type=int, default=1, help="instances per cell")
    p.add_argument("--method", choices=("dp", "fptas"), default="dp")
    p = leaf(bench, "rebp", cmd_bench_rebp, "generation loop on synthetic instances")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--a-max", type=int, default=20)
    p.add_argument("--bins", type=int)
    p.add_argument("--instances", type=int, default=5)

    p = groups.add_parser("report", parents=[common], help="CSV file as an aligned table")
    p.add_argument("csv")
    p.set_defaults(func=cmd_report)

    orc = groups.add_parser("oracle", help="brute-force references").add_subparsers(
        dest="command", required=True)
    p = leaf(orc, "ck", cmd_ck_oracle, "knapsack enumeration")
    p.add_argument("instance")
    p = leaf(orc, "rebp", cmd_rebp_oracle, "robust min-max enumeration")
    p.add_argument("instance")
    p = leaf(orc, "vertices", cmd_vertices, "vertices of the uncertainty set")
    p.add_argument("instance", nargs="?", help="bin packing file (deviations and budget)")
    p.add_argument("--deviation", type=_rational_list)
    p.add_argument("--budget", type=_rational)
    return ap


def _outputs(p):
    p.add_argument("-o", "--output", help="file to write (default: stdout)")
    p.add_argument("--out-dir", help="write under <dir>/v1/<kind>/<name>.<kind>")


def _write_generated(inst, args, kind):
    if args.output:
        write_instance(inst, args.output)
        print(args.output)
    elif args.out_dir:
        print(write_instance(inst, instance_path(args.out_dir, kind, inst.name)))
    else:
        sys.stdout.write(format_instance(inst))


def _load(path, kind):
    try:
        inst = read_instance(path)
    except OSError as exc:
        raise E.ParseError(f"cannot read {path}: {exc.strerror}") from exc
    if not isinstance(inst, kind):
        raise E.ParseError(f"{path} is not a {'knapsack' if kind is CkInstance else 'bin packing'} file")
    return inst


def _print_ck(sol):
    print(f"value {q(sol.value)}")
    print(" ".join(["x", *(q(v) for v in sol.x)]))
    print(" ".join(["full_set", *(str(j) for j in sorted(sol.full_set))]))
    print(f"fractional_item {'-' if sol.fractional_item is None else sol.fractional_item}")


def _solver_setting(args) -> str:
    if args.solver == "external":
        cmd = os.environ.get(SOLVER_ENV)
        if not cmd:
            raise E.SolverNotFound(f"--solver external needs ${SOLVER_ENV}")
        return f"external:{cmd}"
    return args.solver


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_ck_solve(args):
    _print_ck(solve_dp(_load(args.instance, CkInstance)))


def cmd_ck_fptas(args):
    _print_ck(solve_fptas(_load(args.instance, CkInstance), args.epsilon))


def cmd_ck_oracle(args):
    _print_ck(brute_force_ck(_load(args.instance, CkInstance)))


def cmd_ck_export(args):
    print(export_sos2(_load(args.instance, CkInstance), args.output))


def cmd_rebp_solve(args):
    inst = _load(args.instance, RebpInstance)
    config = RcgConfig(tau0=args.tau0, tau1=args.tau1, separation=args.separation,
                       epsilon=args.epsilon, cuts=args.cuts, solver=_solver_setting(args),
                       max_iterations=args.max_iterations, time_limit=args.time_limit)
    result = solve_rebp(inst, config, log=sys.stderr if args.verbose else None)
    print(f"status {result.trace.status}")
    print(f"objective {q(result.objective)}")
    print(f"open_bins {sum(result.solution.y)}")
    print(f"eta {q(result.eta)}")
    print(f"iterations {result.trace.iterations}")
    for j, items in sorted(result.solution.schedule().items()):
        print(f"bin {j}: " + " ".join(str(i) for i in items))
    if args.trace:
        result.trace.to_csv(args.trace)
    else:
        sys.stdout.write(result.trace.to_csv())
    if args.report:
        Path(args.report).write_text(result.report_json(inst) + "\n")
    return 0 if result.complete else EXIT_LIMIT


def cmd_rebp_oracle(args):
    res = robust_brute_force(_load(args.instance, RebpInstance))
    print(f"objective {q(res.objective)}")
    print(f"eta {q(res.eta)}")
    print("worst_case " + " ".join(q(v) for v in res.worst_case))
    for j, items in sorted(res.schedule().items()):
        print(f"bin {j}: " + " ".join(str(i) for i in items))


def cmd_rebp_separate(args):
    inst = _load(args.instance, RebpInstance)
    try:
        sched = read_schedule(args.schedule)
    except OSError as exc:
        raise E.ParseError(f"cannot read {args.schedule}: {exc.strerror}") from exc
    if len(sched.bins) != inst.m:
        raise E.UnassignedItem(f"schedule lists {len(sched.bins)} items, instance has {inst.m}")
    z = assignment_matrix(sched.bins, inst.n)
    y = open_bins_of(sched.bins, inst.n)
    res = separate(inst, y=y, z=z, theta=sched.theta or 0, mode=args.mode, epsilon=args.epsilon)
    print(f"eta {q(res.eta)}")
    print(f"violated {str(res.violated).lower()}")
    print("scenario " + " ".join(q(v) for v in res.scenario))


def cmd_gen_ck(args):
    _write_generated(gen_ck(CkGenSpec(args.n, args.R, args.experiment, args.seed)), args, "ck")


def cmd_gen_rebp(args):
    spec = RebpGenSpec(nominal=args.nominal, m=args.m, a_max=args.a_max, bins=args.bins,
                       deviation_ratio=args.deviation_ratio,
                       capacity_divisor=args.capacity_divisor, budget_ratio=args.budget_ratio,
                       cost_factor=args.cost_factor, seed=args.seed, name=args.name)
    _write_generated(gen_rebp(spec), args, "rebp")


def _bench_ck_cell(job):
    n, R, i, seeds, method, epsilon, limit = job
    times, values = [], []
    for seed in seeds:
        inst = gen_ck(CkGenSpec(n, R, i, seed))
        t0 = time.perf_counter()
        sol = solve_dp(inst) if method == "dp" else solve_fptas(inst, epsilon)
        times.append(time.perf_counter() - t0)
        values.append(sol.value)
    over = sum(1 for t in times if limit is not None and t > limit)
    return (R, n, i, 5 + 3 * i, q(values[0]), f"{sum(times) / len(times):.4f}",
            f"{max(times):.4f}", over)


def _run_jobs(func, jobs, threads):
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, jobs))
    return [func(job) for job in jobs]


def cmd_bench_ck(args):
    ranges = args.R or list(CK_RANGES)
    seeds = [args.seed + s for s in range(args.instances)]
    jobs = [(args.n, R, i, seeds, args.method, args.epsilon, args.time_limit)
            for R in ranges for i in EXPERIMENTS]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("R", "n", "i", "k", "value", "avg", "max", "limit"))
    for row in _run_jobs(_bench_ck_cell, jobs, args.threads):
        w.writerow(row)


def _bench_rebp_one(job):
    m, a_max, bins, seed, config = job
    inst = gen_rebp(RebpGenSpec(m=m, a_max=a_max, bins=bins, seed=seed))
    t0 = time.perf_counter()
    res = solve_rebp(inst, config)
    return (inst.name, m, a_max, q(res.objective), res.trace.iterations, len(res.trace.pool),
            res.trace.status, f"{time.perf_counter() - t0:.4f}")


def cmd_bench_rebp(args):
    config = RcgConfig(tau0=args.tau0, tau1=args.tau1, epsilon=args.epsilon, cuts=args.cuts,
                       solver=_solver_setting(args), time_limit=args.time_limit)
    jobs = [(args.m, args.a_max, args.bins, args.seed + s, config) for s in range(args.instances)]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("name", "m", "a_max", "objective", "iterations", "pool", "status", "seconds"))
    for row in _run_jobs(_bench_rebp_one, jobs, args.threads):
        w.writerow(row)


def format_table(rows: list[list[str]]) -> str:
    if not rows:
        return ""
    widths = [max(len(r[k]) if k < len(r) else 0 for r in rows) for k in range(len(rows[0]))]

    def numeric(s):
        try:
            Fraction(s)
            return True
        except (ValueError, ZeroDivisionError):
            return False

    out = []
    for no, row in enumerate(rows):
        cells = []
        for k, cell in enumerate(row[:len(widths)]):
            right = no > 0 and numeric(cell)
            cells.append(cell.rjust(widths[k]) if right else cell.ljust(widths[k]))
        out.append("  ".join(cells).rstrip())
        if no == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def cmd_report(args):
    try:
        text = Path(args.csv).read_text()
    except OSError as exc:
        raise E.ParseError(f"cannot read {args.csv}: {exc.strerror}") from exc
    sys.stdout.write(format_table(list(csv.reader(io.StringIO(text)))))


def cmd_vertices(args):
    if args.instance:
        inst = _load(args.instance, RebpInstance)
        dev, budget = inst.deviation, inst.budget
    elif args.deviation is not None and args.budget is not None:
        dev, budget = args.deviation, args.budget
    else:
        raise E.BadSpec("give a bin packing file or both --deviation and --budget")
    for a in enumerate_uomega_vertices(dev, budget):
        print(" ".join(q(v) for v in a))


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, _INPUT_ERRORS):
        return EXIT_INPUT
    if isinstance(exc, _SOLVER_ERRORS):
        return EXIT_SOLVER
    return EXIT_MODEL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except E.RebpackError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return exit_code(exc)
    except ValueError as exc:
        print(f"error: InvalidArgument: {exc}", file=sys.stderr)
        return EXIT_MODEL
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
