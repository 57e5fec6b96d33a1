"""Relaxed master problem over a finite scenario pool.

The model is the assignment formulation: binary ``y_j`` (bin open) and
``z_ij`` (item i in bin j), one overflow column ``alpha_js`` per bin and
pooled scenario, and a recourse bound ``theta``. Two solvers are provided:

* :func:`solve_master_internal`, an exact depth-first branch-and-bound over
  item-to-bin assignments that computes ``theta`` exactly per leaf;
* :func:`solve_master_external`, which writes an LP file, calls an external
  MILP solver command and reads its solution file back.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence

from rebpack.errors import (
    CutsRequireEqualCosts,
    DuplicateScenario,
    MasterInfeasible,
    ParseError,
    SolverFailed,
    SolverNotFound,
    SolverReportedInfeasible,
    TooLargeForInternal,
)
from rebpack.lpfile import LinearModel, SolutionFile, format_solution, parse_solution, write_lp
from rebpack.model import (
    RebpInstance,
    Scenario,
    as_rational,
    assignment_matrix,
    bins_of,
    check_scenario,
    lcm_of_denominators,
    open_bins_of,
    positive_part,
)

CUTS_NONE = "none"
CUTS_ORDER = "order"
CUTS_ORDER_OVERTIME = "order+overtime"
CUT_CHOICES = (CUTS_NONE, CUTS_ORDER, CUTS_ORDER_OVERTIME)

HINT_GUIDE = "guide-search"
HINT_START = "construct-start"

DEFAULT_MAX_ITEMS = 14


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioPool:
    """Ordered, duplicate-free scenarios; index 0 is the zero scenario."""

    scenarios: tuple[Scenario, ...]

    @classmethod
    def initial(cls, instance: RebpInstance) -> "ScenarioPool":
        return cls((Scenario.zero(instance.m),))

    def add(self, scenario: Scenario) -> "ScenarioPool":
        if scenario in self.scenarios:
            raise DuplicateScenario(f"scenario {scenario} already pooled")
        return ScenarioPool(self.scenarios + (scenario,))

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self) -> Iterator[Scenario]:
        return iter(self.scenarios)

    def __getitem__(self, k) -> Scenario:
        return self.scenarios[k]


@dataclass(frozen=True)
class MasterSolution:
    y: tuple[int, ...]
    z: tuple[tuple[int, ...], ...]
    theta: Fraction
    alpha: dict[int, tuple[Fraction, ...]] = field(compare=False)
    objective: Fraction
    gap: Fraction = Fraction(0)

    @property
    def bins(self) -> list[int]:
        return bins_of(self.z, self.y)

    @property
    def open_bins(self) -> int:
        return sum(self.y)

    def schedule(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i, j in enumerate(self.bins):
            out.setdefault(j, []).append(i)
        return out


@dataclass(frozen=True, eq=False)
class MasterModel:
    instance: RebpInstance
    pool: ScenarioPool
    cuts: str = CUTS_NONE
    gap: Fraction = Fraction(0)
    hint: MasterSolution | None = None

    @cached_property
    def linear(self) -> LinearModel:
        return _linear_model(self)

    @property
    def overtime_cuts(self) -> bool:
        return self.cuts == CUTS_ORDER_OVERTIME


def build_master(instance: RebpInstance, pool: ScenarioPool | Sequence | None = None,
                 cuts: str = CUTS_NONE, gap=0, hint: MasterSolution | None = None) -> MasterModel:
    if cuts not in CUT_CHOICES:
        raise ValueError(f"cuts must be one of {CUT_CHOICES}, got {cuts!r}")
    if cuts != CUTS_NONE and not instance.equal_rates:
        raise CutsRequireEqualCosts("symmetry-breaking cuts need equal overtime rates")
    if pool is None:
        pool = ScenarioPool.initial(instance)
    elif not isinstance(pool, ScenarioPool):
        scenarios = []
        for s in pool:
            s = check_scenario(instance, s)
            if s in scenarios:
                raise DuplicateScenario(f"scenario {s} listed twice")
            scenarios.append(s)
        pool = ScenarioPool(tuple(scenarios))
    gap = as_rational(gap)
    if not 0 <= gap < 1:
        raise ValueError(f"gap must lie in [0, 1), got {gap}")
    return MasterModel(instance, pool, cuts, gap, hint)


def overtime_cut_bound(instance: RebpInstance, open_count: int) -> Fraction:
    """Least overtime cost when only ``open_count`` equal-rate bins are open."""
    reach = min(instance.total_nominal + instance.budget,
                instance.total_nominal + instance.total_deviation)
    return instance.rates[0] * (reach - open_count * instance.capacity)


def _linear_model(model: MasterModel) -> LinearModel:
    inst, pool = model.instance, model.pool
    m, n = inst.m, inst.n
    lp = LinearModel(name=f"rebp-master {inst.name}".strip(), sense="min")
    for j in range(n):
        lp.add_variable(f"y_{j}", kind="binary")
    for i in range(m):
        for j in range(n):
            lp.add_variable(f"z_{i}_{j}", kind="binary")
    lp.add_variable("theta", 0, None)
    for s in range(len(pool)):
        for j in range(n):
            lp.add_variable(f"alpha_{j}_{s}", 0, None)
    lp.objective = {f"y_{j}": Fraction(1) for j in range(n)}
    lp.objective["theta"] = Fraction(1)

    for i in range(m):
        lp.add_constraint(f"assign_{i}", {f"z_{i}_{j}": 1 for j in range(n)}, "=", 1)
    for i in range(m):
        for j in range(n):
            lp.add_constraint(f"link_{i}_{j}", {f"z_{i}_{j}": 1, f"y_{j}": -1}, "<=", 0)
    for s, scen in enumerate(pool):
        _add_scenario_rows(lp, inst, s, scen)
    if model.cuts in (CUTS_ORDER, CUTS_ORDER_OVERTIME):
        for j in range(n - 1):
            lp.add_constraint(f"order_{j}", {f"y_{j}": 1, f"y_{j + 1}": -1}, ">=", 0)
    if model.cuts == CUTS_ORDER_OVERTIME:
        for j in range(1, n):
            b = overtime_cut_bound(inst, j)
            lp.add_constraint(f"overtime_{j}", {f"y_{j}": b, "theta": 1}, ">=", b)
    return lp


def _add_scenario_rows(lp: LinearModel, inst: RebpInstance, s: int, scen: Scenario):
    for j in range(inst.n):
        coeffs = {f"z_{i}_{j}": inst.nominal[i] + scen[i] for i in range(inst.m)}
        coeffs[f"y_{j}"] = -inst.capacity
        coeffs[f"alpha_{j}_{s}"] = -1
        lp.add_constraint(f"cap_{j}_{s}", coeffs, "<=", 0)
    coeffs = {f"alpha_{j}_{s}": inst.rates[j] for j in range(inst.n)}
    coeffs["theta"] = -1
    lp.add_constraint(f"recourse_{s}", coeffs, "<=", 0)


# ---------------------------------------------------------------------------
# exact recourse values for a fixed schedule
# ---------------------------------------------------------------------------

def pooled_alpha(instance: RebpInstance, y, bins: Sequence[int], scenario) -> tuple[Fraction, ...]:
    loads = [Fraction(0)] * instance.n
    for i, j in enumerate(bins):
        loads[j] += instance.nominal[i] + scenario[i]
    return tuple(positive_part(load - instance.capacity * yj) for load, yj in zip(loads, y))


def recourse_values(model: MasterModel, y, bins: Sequence[int]):
    """Smallest feasible ``theta`` and the matching ``alpha`` columns."""
    inst = model.instance
    alpha = {s: pooled_alpha(inst, y, bins, scen) for s, scen in enumerate(model.pool)}
    theta = Fraction(0)
    for cols in alpha.values():
        theta = max(theta, sum((c * a for c, a in zip(inst.rates, cols)), Fraction(0)))
    if model.overtime_cuts:
        for j in range(1, inst.n):
            if not y[j]:
                theta = max(theta, overtime_cut_bound(inst, j))
    return theta, alpha


def master_solution(model: MasterModel, bins: Sequence[int], gap=0) -> MasterSolution:
    inst = model.instance
    y = open_bins_of(bins, inst.n)
    z = assignment_matrix(bins, inst.n)
    theta, alpha = recourse_values(model, y, bins)
    return MasterSolution(y, z, theta, alpha, sum(y) + theta, as_rational(gap))


def solution_values(sol: MasterSolution) -> dict[str, Fraction]:
    values: dict[str, Fraction] = {f"y_{j}": Fraction(v) for j, v in enumerate(sol.y)}
    for i, row in enumerate(sol.z):
        for j, v in enumerate(row):
            values[f"z_{i}_{j}"] = Fraction(v)
    values["theta"] = sol.theta
    for s, cols in sol.alpha.items():
        for j, a in enumerate(cols):
            values[f"alpha_{j}_{s}"] = a
    return values


def check_master_solution(model: MasterModel, sol: MasterSolution) -> MasterSolution:
    """Re-check every row of the model in exact arithmetic."""
    bad = model.linear.violations(solution_values(sol), tol=0)
    if bad:
        raise MasterInfeasible(f"solution violates {bad[:5]}")
    if sol.objective != sum(sol.y) + sol.theta:
        raise MasterInfeasible("objective does not match sum(y) + theta")
    return sol


def complete_hint(model: MasterModel, hint: MasterSolution, scenario: Scenario) -> MasterSolution:
    """Extend ``hint`` with overflow columns for a newly added scenario."""
    bins = hint.bins
    s = len(model.pool)
    alpha = dict(hint.alpha)
    alpha[s] = pooled_alpha(model.instance, hint.y, bins, scenario)
    cost = sum((c * a for c, a in zip(model.instance.rates, alpha[s])), Fraction(0))
    theta = max(hint.theta, cost)
    return MasterSolution(hint.y, hint.z, theta, alpha, sum(hint.y) + theta, hint.gap)


def add_scenario(model: MasterModel, scenario, hint: MasterSolution | None = None) -> MasterModel:
    """New model with ``scenario`` pooled (n capacity rows, one recourse row
    and n overflow columns more). The hint, if any, is completed for it."""
    scenario = check_scenario(model.instance, scenario)
    pool = model.pool.add(scenario)
    hint = hint if hint is not None else model.hint
    if hint is not None:
        hint = complete_hint(model, hint, scenario)
    return replace(model, pool=pool, hint=hint)


# ---------------------------------------------------------------------------
# internal branch-and-bound
# ---------------------------------------------------------------------------

class _BranchAndBound:
    def __init__(self, model: MasterModel, hint_mode: str):
        inst = model.instance
        self.model = model
        self.n = inst.n
        pool = list(model.pool)
        d = lcm_of_denominators(
            list(inst.nominal) + list(inst.deviation) + [inst.capacity, inst.budget]
            + [v for s in pool for v in s])
        e = lcm_of_denominators(c / d for c in inst.rates)
        self.unit = e  # one bin costs ``e`` scaled units
        self.cap = int(inst.capacity * d)
        self.rates = [int(c * e / d) for c in inst.rates]
        self.rmin = min(self.rates)
        self.order = sorted(range(inst.m), key=lambda i: (-inst.nominal[i], i))
        # item sizes per scenario, in branching order
        self.sizes = [[int((inst.nominal[i] + s[i]) * d) for i in self.order] for s in pool]
        self.suffix = []
        for sizes in self.sizes:
            acc, suf = 0, [0] * (len(sizes) + 1)
            for t in range(len(sizes) - 1, -1, -1):
                acc += sizes[t]
                suf[t] = acc
            self.suffix.append(suf)
        # bins with equal rates are interchangeable
        self.rate_class = {}
        for j, r in enumerate(self.rates):
            self.rate_class.setdefault(r, []).append(j)
        self.cut_theta = None
        if model.overtime_cuts:
            self.cut_theta = [0] * (self.n + 1)
            for k in range(1, self.n):
                self.cut_theta[k] = max(0, int(overtime_cut_bound(inst, k) * e))
        self.gap = model.gap
        self.hint_bins = None
        if model.hint is not None and len(model.hint.z) == inst.m and len(model.hint.y) == self.n:
            self.hint_bins = model.hint.bins
        self.hint_mode = hint_mode
        self.best = None
        self.best_bins = None
        self.lb_pruned = None
        self.nodes = 0

    # scaled cost of a complete assignment given per-scenario loads
    def leaf_cost(self, loads, k_open):
        theta = 0
        for row in loads:
            t = 0
            for j in range(self.n):
                over = row[j] - self.cap
                if over > 0:
                    t += self.rates[j] * over
            theta = max(theta, t)
        if self.cut_theta is not None:
            theta = max(theta, self.cut_theta[k_open])
        return self.unit * k_open + theta

    def bound(self, loads, opened, depth):
        k_open = len(opened)
        base, held, total = [], [], []
        for s, row in enumerate(loads):
            b = h = tot = 0
            for j in opened:
                load = row[j]
                tot += load
                if load > self.cap:
                    b += self.rates[j] * (load - self.cap)
                    h += load
                else:
                    h += self.cap
            base.append(b)
            held.append(h)
            total.append(tot + self.suffix[s][depth])
        best = None
        for k in range(max(k_open, 1), self.n + 1):
            extra_room = (k - k_open) * self.cap
            theta = 0
            for s in range(len(loads)):
                spill = total[s] - held[s] - extra_room
                t = base[s] + (self.rmin * spill if spill > 0 else 0)
                if t > theta:
                    theta = t
            if self.cut_theta is not None and self.cut_theta[k] > theta:
                theta = self.cut_theta[k]
            cost = self.unit * k + theta
            if best is None or cost < best:
                best = cost
        return best

    def children(self, opened, depth):
        item = self.order[depth]
        used = set(opened)
        cands = list(opened)
        for members in self.rate_class.values():
            for j in members:
                if j not in used:
                    cands.append(j)
                    break
        if self.hint_bins is not None and self.hint_mode == HINT_GUIDE:
            h = self.hint_bins[item]
            if h in cands:
                cands.remove(h)
                cands.insert(0, h)
        return cands

    def prune(self, value):
        if self.best is None:
            return False
        if value >= self.best:
            return True
        if self.gap and value >= self.best * (1 - self.gap):
            if self.lb_pruned is None or value < self.lb_pruned:
                self.lb_pruned = value
            return True
        return False

    def offer(self, bins, loads, k_open):
        cost = self.leaf_cost(loads, k_open)
        if self.best is None or cost < self.best:
            self.best = cost
            self.best_bins = list(bins)

    def seed_incumbent(self):
        if self.hint_bins is not None:
            bins = list(self.hint_bins)
            loads = [[0] * self.n for _ in self.sizes]
            for t, i in enumerate(self.order):
                for s, sizes in enumerate(self.sizes):
                    loads[s][bins[i]] += sizes[t]
            self.offer(bins, loads, len(set(bins)))
            return
        # greedy dive: follow the child with the smallest bound
        bins = [None] * len(self.order)
        loads = [[0] * self.n for _ in self.sizes]
        opened = []
        for depth, i in enumerate(self.order):
            best = None
            for j in self.children(opened, depth):
                new_open = opened if j in opened else opened + [j]
                for s, sizes in enumerate(self.sizes):
                    loads[s][j] += sizes[depth]
                b = self.bound(loads, new_open, depth + 1)
                for s, sizes in enumerate(self.sizes):
                    loads[s][j] -= sizes[depth]
                if best is None or b < best[0]:
                    best = (b, j)
            j = best[1]
            bins[i] = j
            if j not in opened:
                opened.append(j)
            for s, sizes in enumerate(self.sizes):
                loads[s][j] += sizes[depth]
        self.offer(bins, loads, len(opened))

    def search(self, bins, loads, opened, depth):
        self.nodes += 1
        if depth == len(self.order):
            self.offer(bins, loads, len(opened))
            return
        if self.prune(self.bound(loads, opened, depth)):
            return
        item = self.order[depth]
        for j in self.children(opened, depth):
            fresh = j not in opened
            if fresh:
                opened.append(j)
            for s, sizes in enumerate(self.sizes):
                loads[s][j] += sizes[depth]
            bins[item] = j
            self.search(bins, loads, opened, depth + 1)
            bins[item] = None
            for s, sizes in enumerate(self.sizes):
                loads[s][j] -= sizes[depth]
            if fresh:
                opened.pop()

    def run(self):
        m = len(self.order)
        self.seed_incumbent()
        self.search([None] * m, [[0] * self.n for _ in self.sizes], [], 0)
        if self.best_bins is None:
            raise MasterInfeasible("branch-and-bound found no assignment")
        lower = self.best if self.lb_pruned is None else min(self.best, self.lb_pruned)
        gap = Fraction(self.best - lower, self.best) if self.best else Fraction(0)
        return self.best_bins, gap


def solve_master_internal(model: MasterModel, max_items: int = DEFAULT_MAX_ITEMS,
                          hint_mode: str = HINT_GUIDE) -> MasterSolution:
    """Exact branch-and-bound; the returned gap is at most ``model.gap``."""
    inst = model.instance
    if inst.m > max_items:
        raise TooLargeForInternal(
            f"internal solver handles at most {max_items} items, instance has {inst.m}")
    bins, gap = _BranchAndBound(model, hint_mode).run()
    sol = master_solution(model, bins, gap)
    return check_master_solution(model, sol)


# ---------------------------------------------------------------------------
# external solver adapter
# ---------------------------------------------------------------------------

def format_options(gap, time_limit=None, hints: Path | None = None,
                   hint_mode: str = HINT_GUIDE) -> str:
    lines = [f"gap {float(as_rational(gap))!r}"]
    if time_limit is not None:
        lines.append(f"time_limit {float(time_limit)!r}")
    if hints is not None:
        lines.append(f"hints {hints}")
        lines.append(f"hint_mode {hint_mode}")
    return "\n".join(lines) + "\n"


def parse_options(text: str) -> dict[str, str]:
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        if key not in ("gap", "time_limit", "hints", "hint_mode"):
            raise ParseError(f"unknown solver option {key!r}")
        out[key] = value.strip()
    return out


def _round_binary(value: float, name: str, tol: float) -> int:
    r = round(value)
    if r not in (0, 1) or abs(value - r) > tol:
        raise ParseError(f"{name} = {value} is not binary within {tol}")
    return int(r)


def run_solver_command(linear: LinearModel, command: str, *, gap=0, time_limit=None,
                       hints: str | None = None, hint_mode: str = HINT_GUIDE,
                       workdir=None) -> SolutionFile:
    """Write ``linear`` as an LP file, run ``command`` on it and parse the
    solution file it leaves behind.

    ``command`` may contain ``{model}``, ``{options}`` and ``{solution}``
    placeholders; otherwise the three paths are appended in that order. The
    solver must write ``name value`` lines (``#`` header lines may carry
    ``Status``, ``Objective value`` and ``Gap``). ``hints`` is the text of a
    start solution in the same format.
    """
    if hint_mode not in (HINT_GUIDE, HINT_START):
        raise ValueError(f"unknown hint mode {hint_mode!r}")
    argv = shlex.split(command)
    if not argv or shutil.which(argv[0]) is None:
        raise SolverNotFound(f"solver command not found: {command!r}")
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        tmp = Path(tmp)
        lp_path = write_lp(linear, tmp / "model.lp")
        hints_path = None
        if hints is not None:
            hints_path = tmp / "hints.sol"
            hints_path.write_text(hints)
        opt_path = tmp / "options.txt"
        opt_path.write_text(format_options(gap, time_limit, hints_path, hint_mode))
        sol_path = tmp / "solution.sol"
        paths = {"model": str(lp_path), "options": str(opt_path), "solution": str(sol_path)}
        if any("{" + k + "}" in a for a in argv for k in paths):
            argv = [a.format(**paths) for a in argv]
        else:
            argv = argv + [paths["model"], paths["options"], paths["solution"]]
        timeout = None if time_limit is None else float(time_limit) + 60
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout,
                                  env=os.environ.copy())
        except FileNotFoundError as exc:
            raise SolverNotFound(str(exc)) from exc
        except subprocess.TimeoutExpired as exc:
            raise SolverFailed(f"solver exceeded {timeout}s") from exc
        if proc.returncode != 0:
            raise SolverFailed(f"solver exited with {proc.returncode}: {proc.stderr.strip()[-500:]}")
        if not sol_path.exists():
            raise SolverFailed("solver wrote no solution file")
        return parse_solution(sol_path.read_text())


def solve_master_external(model: MasterModel, command: str, *, time_limit=None,
                          hint_mode: str = HINT_GUIDE, workdir=None,
                          integrality_tol: float = 1e-6) -> MasterSolution:
    """Solve the master with an external MILP command (see
    :func:`run_solver_command`). Binary values are rounded and the recourse
    part is recomputed and re-checked exactly."""
    inst = model.instance
    hints = None
    if model.hint is not None:
        hints = format_solution(solution_values(model.hint), model.hint.objective, "hint")
    parsed = run_solver_command(model.linear, command, gap=model.gap, time_limit=time_limit,
                                hints=hints, hint_mode=hint_mode, workdir=workdir)
    if parsed.status.startswith("infeasible"):
        raise SolverReportedInfeasible("external solver reports the master infeasible")
    y = []
    for j in range(inst.n):
        name = f"y_{j}"
        if name not in parsed.values:
            raise ParseError(f"solution lacks {name}")
        y.append(_round_binary(parsed.values[name], name, integrality_tol))
    bins = []
    for i in range(inst.m):
        row = []
        for j in range(inst.n):
            name = f"z_{i}_{j}"
            if name not in parsed.values:
                raise ParseError(f"solution lacks {name}")
            row.append(_round_binary(parsed.values[name], name, integrality_tol))
        bins.append(bins_of([row], y)[0])
    # closed bins carrying no item stay closed; open empty bins are kept open
    y = tuple(y)
    theta, alpha = recourse_values(model, y, bins)
    gap = model.gap if parsed.gap is None else max(Fraction(0), as_rational(parsed.gap))
    sol = MasterSolution(y, assignment_matrix(bins, inst.n), theta, alpha, sum(y) + theta,
                         min(gap, Fraction(1)))
    return check_master_solution(model, sol)


def objective_bound_gap(a: Fraction, b: Fraction) -> Fraction:
    """Relative difference ``|a - b| / max(a, b)``."""
    top = max(abs(a), abs(b))
    return Fraction(0) if top == 0 else abs(a - b) / top


__all__ = [
    "CUTS_NONE", "CUTS_ORDER", "CUTS_ORDER_OVERTIME", "CUT_CHOICES",
    "HINT_GUIDE", "HINT_START",
    "ScenarioPool", "MasterSolution", "MasterModel",
    "build_master", "add_scenario", "complete_hint", "check_master_solution",
    "recourse_values", "master_solution", "solve_master_internal", "solve_master_external",
    "overtime_cut_bound", "format_options", "parse_options", "run_solver_command",
]
