"""Acceptance criteria 1-11.

Each test prints one ``criterion N: PASS|FAIL ...`` line, which is also
collected into the terminal summary. Run standalone with
``python tests/test_acceptance.py``.
"""

import math
import random
import sys
import time
from fractions import Fraction
from functools import lru_cache

import pytest

from conftest import ACCEPTANCE_LINES, random_ck, random_rebp, solver_command
from rebpack.errors import SolverNotFound
from rebpack.instances import CK_RANGES, EXPERIMENTS, CkGenSpec, RebpGenSpec, gen_ck, gen_rebp
from rebpack.knapsack import (
    brute_force_ck,
    profit_lower_bound,
    profit_upper_bound,
    solve_dp,
    solve_fptas,
    sos2_model,
    sos2_solution_x,
)
from rebpack.master import CUTS_NONE, CUTS_ORDER, CUTS_ORDER_OVERTIME, run_solver_command
from rebpack.model import assignment_matrix, open_bins_of
from rebpack.oracles import (
    robust_brute_force,
    subset_sum,
    subset_sum_reduction,
    worst_case_by_vertices,
)
from rebpack.rcg import RcgConfig, solve_rebp
from rebpack.separation import separate

CK_SUITE_SIZE = 1000
EPSILONS = (Fraction(1, 2), Fraction(1, 10), Fraction(1, 100))


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


# ---------------------------------------------------------------------------
# shared suites (cached so criteria can also run one at a time)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def ck_suite():
    rng = random.Random(20240601)
    insts = [random_ck(rng, n_max=12, vmax=100) for _ in range(CK_SUITE_SIZE)]
    t0 = time.perf_counter()
    dp = [solve_dp(inst) for inst in insts]
    t1 = time.perf_counter()
    bf = [brute_force_ck(inst) for inst in insts]
    t2 = time.perf_counter()
    return insts, dp, bf, t1 - t0, t2 - t1


@lru_cache(maxsize=None)
def fptas_solutions(eps: Fraction):
    insts = ck_suite()[0]
    return [solve_fptas(inst, eps) for inst in insts]


@lru_cache(maxsize=None)
def subset_sum_suite():
    rng = random.Random(77)
    out = []
    while len(out) < 240:
        m = rng.randint(1, 12)
        w = [rng.randint(1, 50) for _ in range(m)]
        if rng.random() < 0.5:
            target = sum(v for v in w if rng.random() < 0.5) or w[0]
        else:
            target = rng.randint(1, sum(w))
        inst = subset_sum_reduction(w, target)
        out.append((w, target, subset_sum(w, target).feasible, inst, solve_dp(inst)))
    return out


@lru_cache(maxsize=None)
def rcg_suite():
    rng = random.Random(2024)
    runs = []
    t0 = time.perf_counter()
    for _ in range(200):
        inst = random_rebp(rng, m_max=8, n_max=4)
        res = solve_rebp(inst, RcgConfig(tau1=0))
        runs.append((inst, res, robust_brute_force(inst)))
    return runs, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_1_dp_matches_brute_force():
    insts, dp, bf, t_dp, t_bf = ck_suite()
    bad = [k for k, (a, b) in enumerate(zip(dp, bf)) if a.value != b.value]
    total = t_dp + t_bf
    ok = not bad and total < 60 and len(insts) >= 1000
    report(1, ok, f"{len(insts)} instances, {len(bad)} mismatches, "
                  f"dp {t_dp:.2f}s + oracle {t_bf:.2f}s = {total:.2f}s (< 60s)")
    assert ok


def test_criterion_2_subset_sum_reduction():
    suite = subset_sum_suite()
    yes = [s for s in suite if s[2]]
    no = [s for s in suite if not s[2]]
    bad_yes = [s for s in yes if s[4].value != s[1]]
    bad_no = [s for s in no if not s[4].value < s[1]]
    ok = len(suite) >= 200 and not bad_yes and not bad_no and yes and no
    report(2, ok, f"{len(suite)} instances ({len(yes)} yes, {len(no)} no), "
                  f"{len(bad_yes) + len(bad_no)} violations")
    assert ok


def test_criterion_3_fptas_guarantee():
    insts, dp, _, _, _ = ck_suite()
    quality, rows = 0, 0
    for eps in EPSILONS:
        for inst, opt, sol in zip(insts, dp, fptas_solutions(eps)):
            if sol.value < (1 - eps) * opt.value:
                quality += 1
            if sol.profit_bound + 1 > math.ceil(2 * inst.n / eps) + 1:
                rows += 1
    ok = quality == 0 and rows == 0
    report(3, ok, f"eps in 1/2, 1/10, 1/100 on {len(insts)} instances: "
                  f"{quality} value violations, {rows} table-size violations")
    assert ok


def test_criterion_4_profit_bound_sandwich():
    insts, dp, _, _, _ = ck_suite()
    pairs = list(zip(insts, dp)) + [(s[3], s[4]) for s in subset_sum_suite()]
    bad = 0
    for inst, sol in pairs:
        low, high = profit_lower_bound(inst), profit_upper_bound(inst)
        if not (low <= sol.value <= 2 * low and sol.value <= high <= 2 * low):
            bad += 1
    report(4, bad == 0, f"{len(pairs)} instances, {bad} violations of "
                        "lower <= optimum <= upper <= 2 * lower")
    assert bad == 0


def _structure_violation(inst, sol) -> bool:
    if sol.interior_count(inst) > 1:
        return True
    f = sol.fractional_item
    if f is None:
        return False
    return any(inst.items[j].beta < inst.items[f].beta for j in sol.full_set)


def test_criterion_5_extreme_point_and_slope_dominance():
    insts, dp, _, _, _ = ck_suite()
    checked = [(inst, sol) for inst, sol in zip(insts, dp)]
    for eps in EPSILONS:
        checked += list(zip(insts, fptas_solutions(eps)))
    checked += [(s[3], s[4]) for s in subset_sum_suite()]
    bad = sum(_structure_violation(inst, sol) for inst, sol in checked)
    report(5, bad == 0, f"{len(checked)} dp and fptas solutions, {bad} violations")
    assert bad == 0


def test_criterion_6_separation_soundness():
    rng = random.Random(606)
    bad_eta, bad_flag, violated = 0, 0, 0
    runs = 250
    for _ in range(runs):
        inst = random_rebp(rng, m_max=8, n_max=4)
        bins = [rng.randrange(inst.n) for _ in range(inst.m)]
        y = open_bins_of(bins, inst.n)
        z = assignment_matrix(bins, inst.n)
        expected, _ = worst_case_by_vertices(inst, bins)
        theta = rng.choice([expected, expected + 1, expected / 2, Fraction(0),
                            Fraction(rng.randint(0, 40), rng.randint(1, 4))])
        res = separate(inst, y=y, z=z, theta=theta, mode="exact")
        bad_eta += res.eta != expected
        bad_flag += res.violated != (expected > theta)
        violated += res.violated
    ok = bad_eta == 0 and bad_flag == 0
    report(6, ok, f"{runs} instances ({violated} violated), {bad_eta} eta mismatches, "
                  f"{bad_flag} flag mismatches")
    assert ok


def test_criterion_7_rcg_matches_robust_oracle():
    runs, seconds = rcg_suite()
    bad = [k for k, (_, res, ref) in enumerate(runs)
           if res.objective != ref.objective or not res.complete]
    ok = len(runs) >= 200 and not bad and seconds < 600
    report(7, ok, f"{len(runs)} instances, {len(bad)} mismatches, {seconds:.1f}s (< 600s)")
    assert ok


def test_criterion_8_cut_settings_agree():
    runs, _ = rcg_suite()
    equal = [(inst, ref) for inst, _, ref in runs if inst.equal_rates]
    bad = 0
    for inst, ref in equal:
        values = {solve_rebp(inst, RcgConfig(tau0=0, tau1=0, cuts=c)).objective
                  for c in (CUTS_NONE, CUTS_ORDER, CUTS_ORDER_OVERTIME)}
        bad += values != {ref.objective}
    report(8, bad == 0, f"{len(equal)} equal-cost instances x 3 cut settings, "
                        f"{bad} disagreements")
    assert bad == 0


def test_criterion_9_pool_and_trace_invariants():
    runs, _ = rcg_suite()
    broken = [(k, v) for k, (_, res, _) in enumerate(runs)
              for v in res.trace.invariant_violations()]
    theta_runs = [k for k, (_, res, _) in enumerate(runs) if res.trace.theta_decreases()]
    ok = not broken and not theta_runs
    detail = (f"{len(runs)} runs: {len(broken)} pool/violation/duplicate failures; "
              f"theta decreased within a gap phase in {len(theta_runs)} runs")
    if theta_runs:
        phases = {str(r.gap) for k in theta_runs for r in runs[k][1].trace.records
                  if r.iteration in runs[k][1].trace.theta_decreases()}
        detail += f" (runs {theta_runs}, master gap {', '.join(sorted(phases))})"
    report(9, ok, detail)
    assert ok


def test_criterion_10_generator_fidelity():
    bad, count = 0, 0
    for R in CK_RANGES:
        for i in EXPERIMENTS:
            inst = gen_ck(CkGenSpec(n=12, R=R, experiment=i, seed=i))
            count += 1
            for it in inst.items:
                p = it.full_profit
                bad += it.upper != math.ceil(p + Fraction(R, 10))
            bad += inst.capacity != Fraction(5 + 3 * i, 101) * sum(it.upper for it in inst.items)
    rng = random.Random(10)
    for seed in range(100):
        nominal = tuple(Fraction(rng.randint(1, 100), rng.choice((1, 1, 2, 3)))
                        for _ in range(rng.randint(1, 30)))
        spec = RebpGenSpec(nominal=nominal, seed=seed) if seed % 2 else RebpGenSpec(m=len(nominal), a_max=100, seed=seed)
        inst = gen_rebp(spec)
        count += 1
        dev_ok = all(d == Fraction(2, 5) * a for a, d in zip(inst.nominal, inst.deviation))
        cap = sum(a + d for a, d in zip(inst.nominal, inst.deviation)) / 8
        bad += not (dev_ok and inst.capacity == cap
                    and inst.budget == sum(inst.deviation) / 10
                    and all(c == Fraction(3, 2) / cap for c in inst.rates))
    report(10, bad == 0, f"{count} generated instances, {bad} formula violations")
    assert bad == 0


def test_criterion_11_sos2_export_spot_check():
    command = solver_command()
    insts, dp, _, _, _ = ck_suite()
    bad, done = 0, 0
    try:
        for inst, sol in list(zip(insts, dp))[:20]:
            parsed = run_solver_command(sos2_model(inst), command)
            x = sos2_solution_x(inst, parsed.values)
            value = sum(max(0.0, float(it.gamma) + float(it.beta) * v)
                        for it, v in zip(inst.items, x))
            ref = float(sol.value)
            bad += abs(value - ref) > 1e-6 * max(1.0, abs(ref))
            done += 1
    except SolverNotFound:
        report(11, True, "skipped: no external solver configured")
        pytest.skip("no external solver")
    report(11, bad == 0, f"SOS-2 export via '{command}' on {done} instances, "
                         f"{bad} disagreements with the DP (relative tol 1e-6)")
    assert bad == 0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s", "-p", "no:cacheprovider"]))
