"""Worst-case scenario search for a fixed integral schedule.

For an integral assignment the overtime of bin ``j`` under deviations ``a``
only depends on the total deviation ``x_j`` placed in that bin, and equals
``max(0, c_j (sum nominal - V) + c_j x_j)``. Finding the worst scenario is
therefore a two-piece convex knapsack over bins with capacity equal to the
budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from rebpack.errors import BadBox, FractionalInput, NonIntegerBudget, UnassignedItem
from rebpack.knapsack import solve_dp, solve_fptas
from rebpack.model import (
    CkInstance,
    CkItem,
    RebpInstance,
    Scenario,
    as_rational,
    bins_of,
    overtime_costs,
)


@dataclass(frozen=True)
class SeparationResult:
    eta: Fraction
    scenario: Scenario
    violated: bool
    certificate: tuple[Fraction, ...]  # per-bin overtime cost under ``scenario``
    exact: bool = True


def _integral(values, what) -> tuple[int, ...]:
    out = []
    for v in values:
        q = as_rational(v)
        if q not in (0, 1):
            raise FractionalInput(f"{what} must be binary, got {v}")
        out.append(int(q))
    return tuple(out)


def _check_schedule(instance: RebpInstance, y, z) -> tuple[tuple[int, ...], list[int]]:
    y = _integral(y, "y")
    if len(y) != instance.n or len(z) != instance.m:
        raise UnassignedItem("schedule dimensions do not match the instance")
    rows = [_integral(row, "z") for row in z]
    return y, bins_of(rows, y)


def build_sep_instance(instance: RebpInstance, y, z) -> tuple[CkInstance, tuple[int, ...]]:
    """Knapsack with one item per bin that can overflow.

    Returns the instance and, for each stored knapsack item, the bin it
    stands for.
    """
    y, bins = _check_schedule(instance, y, z)
    items, owners = [], []
    for j in range(instance.n):
        members = [i for i, b in enumerate(bins) if b == j]
        upper = sum((instance.deviation[i] for i in members), Fraction(0))
        if not y[j] or upper == 0:
            continue
        nominal = sum((instance.nominal[i] for i in members), Fraction(0))
        c = instance.rates[j]
        items.append(CkItem(c * (nominal - instance.capacity * y[j]), c, upper))
        owners.append(j)
    ck = CkInstance(tuple(items), instance.budget)
    return ck, tuple(owners[k] for k in ck.index)


def spread_deviation(instance: RebpInstance, bins: Sequence[int],
                     per_bin: dict[int, Fraction]) -> Scenario:
    """Distribute each bin's deviation over its items in index order."""
    a = [Fraction(0)] * instance.m
    remaining = dict(per_bin)
    for i, j in enumerate(bins):
        left = remaining.get(j, Fraction(0))
        if left <= 0:
            continue
        take = min(left, instance.deviation[i])
        a[i] = take
        remaining[j] = left - take
    if any(v > 0 for v in remaining.values()):
        raise AssertionError("bin deviation exceeds the deviation of its items")
    return Scenario(tuple(a))


def separate(instance: RebpInstance, solution=None, *, y=None, z=None, theta=None,
             mode: str = "exact", epsilon=Fraction(1, 10)) -> SeparationResult:
    """Find the worst scenario for schedule ``(y, z)`` and compare with ``theta``.

    ``solution`` may be any object with ``y``, ``z`` and ``theta`` attributes
    (a master solution); explicit keywords override it. ``mode`` is
    ``"exact"`` or ``"fptas"``. In FPTAS mode a non-violation only shows the
    cut is violated by less than the approximation loss.
    """
    if solution is not None:
        y = solution.y if y is None else y
        z = solution.z if z is None else z
        theta = solution.theta if theta is None else theta
    if y is None or z is None:
        raise ValueError("separate needs a schedule")
    theta = Fraction(0) if theta is None else as_rational(theta)
    y, bins = _check_schedule(instance, y, z)
    ck, owners = build_sep_instance(instance, y, [[1 if b == j else 0 for j in range(instance.n)]
                                                  for b in bins])
    if mode == "exact":
        sol = solve_dp(ck)
    elif mode == "fptas":
        sol = solve_fptas(ck, epsilon)
    else:
        raise ValueError(f"unknown separation mode {mode!r}")
    per_bin = {owners[k]: v for k, v in enumerate(sol.x) if v > 0}
    scenario = spread_deviation(instance, bins, per_bin)
    costs = tuple(overtime_costs(instance, y, bins, scenario))
    eta = sum(costs, Fraction(0))
    return SeparationResult(eta, scenario, eta > theta, costs, mode == "exact")


def worst_case_overtime(instance: RebpInstance, y, z) -> tuple[Fraction, Scenario]:
    res = separate(instance, y=y, z=z, theta=0)
    return res.eta, res.scenario


# ---------------------------------------------------------------------------
# rounding a fractional maximiser to a 0/1 vertex
# ---------------------------------------------------------------------------

def round_to_vertex(g: Callable[[tuple[Fraction, ...]], Fraction],
                    right_partial: Callable[[tuple[Fraction, ...], int], Fraction],
                    a_star: Sequence, budget) -> tuple[Fraction, ...]:
    """Round a maximiser of a convex nondecreasing ``g`` over
    ``{0 <= a <= 1, sum(a) <= budget}`` to a 0/1 point with exactly ``budget``
    ones and no smaller objective.

    Each step takes the two lowest-index fractional coordinates, moves mass
    toward the one with the larger right partial derivative until one of them
    becomes integral.
    """
    a = [as_rational(v) for v in a_star]
    m = len(a)
    omega = as_rational(budget)
    if omega.denominator != 1 or not 0 <= omega <= m:
        raise NonIntegerBudget(f"budget must be an integer in [0, {m}], got {budget}")
    if any(v < 0 or v > 1 for v in a):
        raise BadBox("point lies outside the unit box")
    slack = omega - sum(a, Fraction(0))
    if slack < 0:
        raise BadBox("point exceeds the budget")
    # g is nondecreasing, so topping up to the budget cannot hurt
    for i in sorted(range(m), key=lambda i: (a[i] == 0, i)):
        if slack == 0:
            break
        step = min(1 - a[i], slack)
        a[i] += step
        slack -= step

    while True:
        frac = [i for i in range(m) if 0 < a[i] < 1]
        if not frac:
            return tuple(a)
        if len(frac) == 1:
            raise AssertionError("single fractional coordinate with integral budget")
        i, k = frac[0], frac[1]
        point = tuple(a)
        if right_partial(point, k) > right_partial(point, i):
            i, k = k, i
        step = min(1 - a[i], a[k])
        a[i] += step
        a[k] -= step
