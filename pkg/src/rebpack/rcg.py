"""Row-and-column generation for the robust extensible bin packing problem.

Master solves and worst-case separations alternate. Each violated scenario
adds one block of rows and overflow columns to the master. The master is
first solved to a loose gap ``tau0``; once no scenario is violated the gap is
tightened to ``tau1``. Separation may start with the FPTAS and switches to
the exact DP before termination is certified.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from rebpack.master import (
    CUTS_NONE,
    CUTS_ORDER_OVERTIME,
    HINT_GUIDE,
    DEFAULT_MAX_ITEMS,
    MasterSolution,
    add_scenario,
    build_master,
    solve_master_external,
    solve_master_internal,
)
from rebpack.model import RebpInstance, Scenario, as_rational
from rebpack.oracles import robust_brute_force  # noqa: F401  (re-exported)
from rebpack.separation import SeparationResult, separate

STATUS_OPTIMAL = "optimal"
STATUS_ITERATION_LIMIT = "iteration_limit"
STATUS_TIME_LIMIT = "time_limit"


@dataclass(frozen=True)
class RcgConfig:
    tau0: Fraction = Fraction(1, 5)
    tau1: Fraction = Fraction(1, 20)
    separation: str = "fptas"  # first mode; "exact" skips the FPTAS phase
    epsilon: Fraction = Fraction(1, 10)
    cuts: str = "auto"  # "auto" picks order+overtime on equal-rate instances
    solver: str = "internal"  # or "external:<command>"
    max_iterations: int | None = 10_000
    time_limit: float | None = None
    max_items: int = DEFAULT_MAX_ITEMS
    hint_mode: str = HINT_GUIDE

    def __post_init__(self):
        object.__setattr__(self, "tau0", as_rational(self.tau0))
        object.__setattr__(self, "tau1", as_rational(self.tau1))
        object.__setattr__(self, "epsilon", as_rational(self.epsilon))
        for tau in (self.tau0, self.tau1):
            if not 0 <= tau < 1:
                raise ValueError(f"gaps must lie in [0, 1), got {tau}")
        if self.separation not in ("fptas", "exact"):
            raise ValueError(f"unknown separation mode {self.separation!r}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.solver == "internal" and not self.solver.startswith("external:"):
            raise ValueError(f"solver must be 'internal' or 'external:<cmd>', got {self.solver!r}")

    def cuts_for(self, instance: RebpInstance) -> str:
        if self.cuts == "auto":
            return CUTS_ORDER_OVERTIME if instance.equal_rates else CUTS_NONE
        return self.cuts


@dataclass(frozen=True)
class RcgRecord:
    iteration: int
    pool_size: int
    gap: Fraction
    mode: str
    objective: Fraction
    theta: Fraction
    eta: Fraction
    violated: bool
    scenario: str
    seconds: float


TRACE_COLUMNS = ("iteration", "pool_size", "gap", "mode", "objective", "theta",
                 "eta", "violated", "scenario", "seconds")


@dataclass
class RcgTrace:
    records: list[RcgRecord] = field(default_factory=list)
    status: str = STATUS_OPTIMAL
    pool: tuple[Scenario, ...] = ()

    @property
    def complete(self) -> bool:
        return self.status == STATUS_OPTIMAL

    @property
    def iterations(self) -> int:
        return len(self.records)

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            row = asdict(r)
            row["seconds"] = f"{r.seconds:.6f}"
            row["violated"] = int(r.violated)
            w.writerow([row[k] for k in TRACE_COLUMNS])
        text = buf.getvalue()
        if target is not None:
            Path(target).write_text(text)
        return text

    def theta_decreases(self) -> list[int]:
        """Iterations whose theta is below the previous one at the same gap.

        With a loose gap the master may return a suboptimal schedule and a
        later, cheaper one can have a smaller theta; even exact masters can
        trade overtime for an extra bin. This is reported, not enforced.
        """
        out = []
        for prev, r in zip(self.records, self.records[1:]):
            if r.gap == prev.gap and r.theta < prev.theta:
                out.append(r.iteration)
        return out

    def objective_decreases(self, gap=0) -> list[int]:
        """Iterations at master gap ``gap`` whose objective fell; must be empty
        for ``gap == 0`` since every pooled scenario only tightens the master."""
        out = []
        for prev, r in zip(self.records, self.records[1:]):
            if r.gap == prev.gap == gap and r.objective < prev.objective:
                out.append(r.iteration)
        return out

    def invariant_violations(self) -> list[str]:
        """Pool and trace properties that hold on every run."""
        problems = []
        if len(set(self.pool)) != len(self.pool):
            problems.append("duplicate scenario in pool")
        for r in self.records:
            if r.violated and not r.eta > r.theta:
                problems.append(f"iteration {r.iteration}: scenario added without violation")
        added = [r.scenario for r in self.records if r.violated]
        if self.pool and [str(a) for a in self.pool[1:]] != added[:len(self.pool) - 1]:
            problems.append("pool does not match the violated scenarios in the trace")
        for k in self.objective_decreases(0):
            problems.append(f"iteration {k}: exact master objective decreased")
        if self.complete and self.records:
            last = self.records[-1]
            if last.violated or last.mode != "exact":
                problems.append("final record is not a clean exact separation")
        return problems


@dataclass
class RcgResult:
    solution: MasterSolution
    trace: RcgTrace
    eta: Fraction  # exact worst-case overtime of the returned schedule
    worst_case: Scenario

    @property
    def objective(self) -> Fraction:
        """Robust cost of the returned schedule: open bins plus worst overtime."""
        return sum(self.solution.y) + self.eta

    @property
    def complete(self) -> bool:
        return self.trace.complete

    def __iter__(self):
        return iter((self.solution, self.trace))

    def report(self, instance: RebpInstance | None = None) -> dict:
        return {
            "name": instance.name if instance is not None else "",
            "status": self.trace.status,
            "objective": str(self.objective),
            "open_bins": sum(self.solution.y),
            "theta": str(self.solution.theta),
            "eta": str(self.eta),
            "iterations": self.trace.iterations,
            "schedule": {str(j): items for j, items in sorted(self.solution.schedule().items())},
            "worst_case_scenario": [str(v) for v in self.worst_case],
        }

    def report_json(self, instance: RebpInstance | None = None) -> str:
        return json.dumps(self.report(instance), indent=2)


def _solver(config: RcgConfig, deadline):
    if config.solver == "internal":
        return lambda model: solve_master_internal(model, config.max_items, config.hint_mode)
    command = config.solver.split(":", 1)[1]

    def run(model):
        left = None if deadline is None else max(1.0, deadline - time.monotonic())
        return solve_master_external(model, command, time_limit=left, hint_mode=config.hint_mode)
    return run


def solve_rebp(instance: RebpInstance, config: RcgConfig | None = None,
               log=None) -> RcgResult:
    config = config or RcgConfig()
    start = time.monotonic()
    deadline = None if config.time_limit is None else start + float(config.time_limit)
    solve = _solver(config, deadline)
    model = build_master(instance, cuts=config.cuts_for(instance), gap=config.tau0)
    tightened = config.tau0 == config.tau1
    mode = config.separation
    trace = RcgTrace()
    seen: dict[tuple, MasterSolution] = {}
    sol = None
    need_solve = True

    while True:
        if config.max_iterations is not None and trace.iterations >= config.max_iterations:
            trace.status = STATUS_ITERATION_LIMIT
            break
        if trace.iterations and deadline is not None and time.monotonic() >= deadline:
            trace.status = STATUS_TIME_LIMIT
            break
        if need_solve:
            sol = solve(model)
            seen.setdefault(tuple(sol.bins), sol)
        res: SeparationResult = separate(instance, sol, mode=mode, epsilon=config.epsilon)
        rec = RcgRecord(trace.iterations + 1, len(model.pool), model.gap, mode, sol.objective,
                        sol.theta, res.eta, res.violated, str(res.scenario),
                        time.monotonic() - start)
        trace.records.append(rec)
        if log is not None:
            print(f"iter {rec.iteration}: gap={float(rec.gap):g} mode={mode} "
                  f"obj={rec.objective} theta={rec.theta} eta={rec.eta}", file=log)
        if res.violated:
            model = add_scenario(model, res.scenario, hint=sol)
            need_solve = True
        elif not tightened:
            tightened = True
            model = replace(model, gap=config.tau1, hint=sol)
            need_solve = True
        elif mode != "exact":
            mode = "exact"
            need_solve = False  # same master; re-separate its solution exactly
        else:
            break

    trace.pool = tuple(model.pool)
    if trace.complete:
        eta, scenario = res.eta, res.scenario
    else:
        # best robust value among the schedules seen so far
        best = None
        for cand in seen.values():
            r = separate(instance, cand, mode="exact")
            if best is None or sum(cand.y) + r.eta < sum(best[0].y) + best[1].eta:
                best = (cand, r)
        if best is None:
            raise RuntimeError("limit reached before the first master solve")
        sol, r = best
        eta, scenario = r.eta, r.scenario
    return RcgResult(sol, trace, eta, scenario)


__all__ = ["RcgConfig", "RcgRecord", "RcgTrace", "RcgResult", "solve_rebp",
           "robust_brute_force", "STATUS_OPTIMAL", "STATUS_ITERATION_LIMIT",
           "STATUS_TIME_LIMIT", "TRACE_COLUMNS"]
