"""Domain types shared by every module.

All arithmetic is exact: durations, rates and budgets are stored as
:class:`fractions.Fraction`. Floats only appear when something is printed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Sequence

from rebpack.errors import (
    BadInstance,
    BudgetOutOfRange,
    EmptyInstance,
    InstanceError,
    NegativeDuration,
    ScenarioInfeasible,
    UnassignedItem,
)

Rational = Fraction


def as_rational(value) -> Fraction:
    """Coerce ints, strings ("3/4", "0.1") and floats to an exact Fraction.

    Floats go through their shortest repr so that ``0.1`` becomes ``1/10``
    rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not durations")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def lcm_of_denominators(values: Iterable[Fraction]) -> int:
    return reduce(math.lcm, (v.denominator for v in values), 1)


def positive_part(value: Fraction) -> Fraction:
    return value if value > 0 else Fraction(0)


# ---------------------------------------------------------------------------
# robust extensible bin packing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RebpInstance:
    """Items with nominal and deviation durations, ``bin_count`` bins of
    capacity ``capacity``, per-bin overtime ``rates`` and deviation budget."""

    nominal: tuple[Fraction, ...]
    deviation: tuple[Fraction, ...]
    bin_count: int
    capacity: Fraction
    rates: tuple[Fraction, ...]
    budget: Fraction
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "nominal", tuple(as_rational(v) for v in self.nominal))
        object.__setattr__(self, "deviation", tuple(as_rational(v) for v in self.deviation))
        object.__setattr__(self, "capacity", as_rational(self.capacity))
        object.__setattr__(self, "budget", as_rational(self.budget))
        rates = self.rates
        if isinstance(rates, (int, float, str, Fraction)):
            rates = (rates,) * int(self.bin_count)
        object.__setattr__(self, "rates", tuple(as_rational(v) for v in rates))
        validate_rebp(self)

    @property
    def m(self) -> int:
        return len(self.nominal)

    @property
    def n(self) -> int:
        return self.bin_count

    @property
    def equal_rates(self) -> bool:
        """True when every bin has the same overtime rate (gates the
        symmetry-breaking cuts)."""
        return len(set(self.rates)) <= 1

    @property
    def max_nominal(self) -> Fraction:
        return max(self.nominal)

    @property
    def total_nominal(self) -> Fraction:
        return sum(self.nominal, Fraction(0))

    @property
    def total_deviation(self) -> Fraction:
        return sum(self.deviation, Fraction(0))

    @cached_property
    def integer_form(self) -> "IntegerForm":
        return IntegerForm.of(self)


def rebp_violations(instance: RebpInstance) -> list[InstanceError]:
    """Every invariant violation of ``instance`` (empty list when valid)."""
    problems: list[InstanceError] = []
    if instance.m == 0:
        problems.append(EmptyInstance("instance has no items"))
    if len(instance.deviation) != instance.m:
        problems.append(BadInstance(
            f"{instance.m} nominal durations but {len(instance.deviation)} deviations"))
    if not isinstance(instance.bin_count, int) or instance.bin_count < 1:
        problems.append(EmptyInstance(f"bin_count must be a positive integer, got {instance.bin_count!r}"))
    for i, (a, d) in enumerate(zip(instance.nominal, instance.deviation)):
        if a < 0 or d < 0:
            problems.append(NegativeDuration(f"item {i} has negative duration ({a}, {d})"))
    if instance.capacity <= 0:
        problems.append(BadInstance(f"capacity must be positive, got {instance.capacity}"))
    if isinstance(instance.bin_count, int) and len(instance.rates) != instance.bin_count:
        problems.append(BadInstance(
            f"{len(instance.rates)} overtime rates for {instance.bin_count} bins"))
    if any(c <= 0 for c in instance.rates):
        problems.append(BadInstance("overtime rates must be positive"))
    total_dev = sum(instance.deviation, Fraction(0))
    if instance.budget < 0 or instance.budget > total_dev:
        problems.append(BudgetOutOfRange(
            f"budget {instance.budget} outside [0, {total_dev}]"))
    return problems


def validate_rebp(instance: RebpInstance) -> RebpInstance:
    """Return ``instance`` unchanged or raise its first violation.

    The raised exception has a ``violations`` attribute listing all of them.
    """
    problems = rebp_violations(instance)
    if problems:
        first = problems[0]
        first.violations = problems
        if len(problems) > 1:
            first.args = ("; ".join(str(p) for p in problems),)
        raise first
    return instance


@dataclass(frozen=True)
class IntegerForm:
    """Integer rescaling of a :class:`RebpInstance`.

    Durations are multiplied by ``duration_scale`` and costs by
    ``cost_scale`` so that ``cost_scale * (sum(y) + sum_j c_j * overflow_j)``
    equals ``cost_scale * bins + sum_j rates[j] * overflow_int_j``.
    """

    duration_scale: int
    cost_scale: int
    nominal: tuple[int, ...]
    deviation: tuple[int, ...]
    capacity: int
    budget: int
    rates: tuple[int, ...]

    @classmethod
    def of(cls, inst: RebpInstance) -> "IntegerForm":
        d = lcm_of_denominators(
            list(inst.nominal) + list(inst.deviation) + [inst.capacity, inst.budget])
        e = lcm_of_denominators(c / d for c in inst.rates)
        as_int = lambda q, s: int(q * s)  # noqa: E731
        return cls(
            duration_scale=d,
            cost_scale=e,
            nominal=tuple(as_int(a, d) for a in inst.nominal),
            deviation=tuple(as_int(a, d) for a in inst.deviation),
            capacity=as_int(inst.capacity, d),
            budget=as_int(inst.budget, d),
            rates=tuple(as_int(c * e / d, 1) for c in inst.rates),
        )

    def cost(self, value: int) -> Fraction:
        """Convert a scaled integer cost back to exact units."""
        return Fraction(value, self.cost_scale)


@dataclass(frozen=True)
class Scenario:
    """A deviation vector ``a`` with ``0 <= a <= dev`` and ``sum(a) <= budget``."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(as_rational(v) for v in self.values))

    @classmethod
    def zero(cls, m: int) -> "Scenario":
        return cls((Fraction(0),) * m)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    @property
    def mass(self) -> Fraction:
        return sum(self.values, Fraction(0))

    def __str__(self):
        return "(" + ", ".join(str(v) for v in self.values) + ")"


def scenario_in_uncertainty_set(instance: RebpInstance, scenario: Sequence) -> bool:
    values = [as_rational(v) for v in scenario]
    if len(values) != instance.m:
        return False
    if any(v < 0 or v > d for v, d in zip(values, instance.deviation)):
        return False
    return sum(values, Fraction(0)) <= instance.budget


def check_scenario(instance: RebpInstance, scenario) -> Scenario:
    if not isinstance(scenario, Scenario):
        scenario = Scenario(tuple(scenario))
    if not scenario_in_uncertainty_set(instance, scenario.values):
        raise ScenarioInfeasible(f"scenario {scenario} is not in the uncertainty set")
    return scenario


# ---------------------------------------------------------------------------
# assignments
# ---------------------------------------------------------------------------

def assignment_matrix(bins: Sequence[int], n: int) -> tuple[tuple[int, ...], ...]:
    """0/1 matrix ``z`` (m x n) from a list giving each item's bin."""
    rows = []
    for i, j in enumerate(bins):
        if not 0 <= j < n:
            raise UnassignedItem(f"item {i} assigned to nonexistent bin {j}")
        rows.append(tuple(1 if k == j else 0 for k in range(n)))
    return tuple(rows)


def bins_of(z, y=None) -> list[int]:
    """Inverse of :func:`assignment_matrix`; checks every item sits in exactly
    one (open, when ``y`` is given) bin."""
    bins = []
    for i, row in enumerate(z):
        hits = [j for j, v in enumerate(row) if v]
        if len(hits) != 1 or any(v not in (0, 1) for v in row):
            raise UnassignedItem(f"item {i} is not assigned to exactly one bin: {tuple(row)}")
        if y is not None and not y[hits[0]]:
            raise UnassignedItem(f"item {i} assigned to closed bin {hits[0]}")
        bins.append(hits[0])
    return bins


def open_bins_of(bins: Sequence[int], n: int) -> tuple[int, ...]:
    used = set(bins)
    return tuple(1 if j in used else 0 for j in range(n))


def bin_loads(instance: RebpInstance, bins: Sequence[int], scenario) -> list[Fraction]:
    loads = [Fraction(0)] * instance.n
    for i, j in enumerate(bins):
        loads[j] += instance.nominal[i] + scenario[i]
    return loads


def overtime_costs(instance: RebpInstance, y, bins: Sequence[int], scenario) -> list[Fraction]:
    """Per-bin ``c_j * (load_j - V y_j)_+``."""
    loads = bin_loads(instance, bins, scenario)
    return [c * positive_part(load - instance.capacity * yj)
            for c, load, yj in zip(instance.rates, loads, y)]


def rebp_objective(instance: RebpInstance, y, z, scenario) -> Fraction:
    """Open-bin count plus overtime cost of schedule ``(y, z)`` under ``scenario``."""
    scenario = check_scenario(instance, scenario)
    if len(z) != instance.m:
        raise UnassignedItem(f"assignment has {len(z)} rows for {instance.m} items")
    bins = bins_of(z, y)
    return sum(y) + sum(overtime_costs(instance, y, bins, scenario), Fraction(0))


# ---------------------------------------------------------------------------
# two-piece convex knapsack
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CkItem:
    """Profit ``max(0, gamma + beta * x)`` for ``0 <= x <= upper``."""

    gamma: Fraction
    beta: Fraction
    upper: Fraction

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_rational(self.gamma))
        object.__setattr__(self, "beta", as_rational(self.beta))
        object.__setattr__(self, "upper", as_rational(self.upper))

    def profit(self, x) -> Fraction:
        return positive_part(self.gamma + self.beta * x)

    @property
    def full_profit(self) -> Fraction:
        return self.profit(self.upper)

    @property
    def breakpoint(self) -> Fraction:
        """Where the flat piece ends."""
        return positive_part(-self.gamma / self.beta)


@dataclass(frozen=True)
class CkInstance:
    """Two-piece convex knapsack: maximise ``sum_j p_j(x_j)`` subject to
    ``sum x <= capacity`` and ``0 <= x <= upper``.

    Items whose full profit is not positive never help and are dropped on
    construction; ``index[k]`` is the input position of stored item ``k``.
    """

    items: tuple[CkItem, ...]
    capacity: Fraction
    name: str = ""
    index: tuple[int, ...] = field(init=False, compare=False)

    def __post_init__(self):
        raw = [it if isinstance(it, CkItem) else CkItem(*it) for it in self.items]
        cap = as_rational(self.capacity)
        if cap < 0:
            raise BudgetOutOfRange(f"knapsack capacity {cap} is negative")
        for j, it in enumerate(raw):
            if it.beta <= 0:
                raise BadInstance(f"item {j}: slope must be positive, got {it.beta}")
            if it.upper <= 0:
                raise BadInstance(f"item {j}: upper bound must be positive, got {it.upper}")
        kept = [j for j, it in enumerate(raw) if it.full_profit > 0]
        object.__setattr__(self, "items", tuple(raw[j] for j in kept))
        object.__setattr__(self, "capacity", cap)
        object.__setattr__(self, "index", tuple(kept))

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def profit_scale(self) -> int:
        """Smallest S with ``S * p_j(u_j)`` integral for every item."""
        return lcm_of_denominators(it.full_profit for it in self.items)

    def objective(self, x: Sequence) -> Fraction:
        return sum((it.profit(v) for it, v in zip(self.items, x)), Fraction(0))

    def is_feasible(self, x: Sequence) -> bool:
        if len(x) != self.n:
            return False
        if any(v < 0 or v > it.upper for v, it in zip(x, self.items)):
            return False
        return sum(x, Fraction(0)) <= self.capacity


@dataclass(frozen=True)
class CkSolution:
    """Extreme-point knapsack solution.

    ``full_set`` holds the items at their upper bound; ``fractional_item`` is
    the single item strictly between 0 and its bound, if any. ``profit_bound``
    records the number of profit levels of the table that produced it.
    """

    value: Fraction
    x: tuple[Fraction, ...]
    full_set: frozenset[int]
    fractional_item: int | None = None
    profit_bound: int | None = None

    def interior_count(self, instance: CkInstance) -> int:
        return sum(1 for v, it in zip(self.x, instance.items) if 0 < v < it.upper)


def ck_solution_from_x(instance: CkInstance, x: Sequence[Fraction],
                       profit_bound: int | None = None) -> CkSolution:
    x = tuple(as_rational(v) for v in x)
    full = frozenset(j for j, (v, it) in enumerate(zip(x, instance.items)) if v == it.upper)
    inner = [j for j, (v, it) in enumerate(zip(x, instance.items)) if 0 < v < it.upper]
    frac = inner[0] if len(inner) == 1 else None
    if len(inner) > 1:
        raise ValueError(f"not an extreme point: items {inner} are interior")
    return CkSolution(instance.objective(x), x, full, frac, profit_bound)
