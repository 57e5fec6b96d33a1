"""Exact and approximate solvers for the two-piece convex knapsack.

Every item's profit is ``p_j(x) = max(0, gamma_j + beta_j x)`` on
``[0, u_j]``. Solvers work on a normalised view of the instance:

* the constant ``p_j(0) = max(0, gamma_j)`` is split off into an offset, so
  each item contributes a *gain* ``g_j(x) = p_j(x) - p_j(0)`` which is flat
  (zero) up to its breakpoint and then linear with slope ``beta_j``;
* bounds are truncated to ``min(u_j, capacity)``, which leaves the feasible
  set unchanged but guarantees every item fits on its own, so the classical
  ``P_min <= P* <= 2 P_min`` sandwich holds;
* items with no reachable gain are ignored (their ``x_j`` stays 0).

The dynamic program tabulates least weights ``zeta(P, k)``: the smallest total
bound of a subset of the first ``k`` items (slope order) whose scaled gain is
at least ``P``. One table serves every choice of fractional item ``f``
because the excluded item is always the last one considered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from rebpack.errors import (
    EpsilonOutOfRange,
    ProfitBoundOverflow,
    ScalingNotExact,
    TooLarge,
)
from rebpack.lpfile import Constraint, LinearModel, SosSet, write_lp
from rebpack.model import (
    CkInstance,
    CkSolution,
    as_rational,
    ck_solution_from_x,
    lcm_of_denominators,
    positive_part,
)

#: default cap on (profit levels) x (items + 1) table cells
DEFAULT_MAX_CELLS = 60_000_000

#: enumeration guard of the brute-force oracle
BRUTE_FORCE_MAX_ITEMS = 22


class _Infeasible:
    """Tag returned by :meth:`DpTable.weight` when no subset reaches ``P``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFEASIBLE"


INFEASIBLE = _Infeasible()


# ---------------------------------------------------------------------------
# normalisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Prepared:
    positions: tuple[int, ...]  # stored-item index of each sorted position
    gamma: tuple[Fraction, ...]  # min(gamma, 0): gain intercept
    beta: tuple[Fraction, ...]
    upper: tuple[Fraction, ...]  # min(u, capacity)
    gain: tuple[Fraction, ...]   # g_j(upper_j) > 0
    offset: Fraction
    capacity: Fraction

    @property
    def n(self) -> int:
        return len(self.positions)

    def gain_at(self, k: int, x: Fraction) -> Fraction:
        return positive_part(self.gamma[k] + self.beta[k] * x)


def _effective_upper(instance: CkInstance, j: int) -> Fraction:
    return min(instance.items[j].upper, instance.capacity)


def sort_for_dp(instance: CkInstance) -> tuple[int, ...]:
    """Permutation of item indices by slope, steepest first.

    Equal slopes are ordered by (capacity-truncated) upper bound, smaller
    first, then by index.
    """
    return tuple(sorted(
        range(instance.n),
        key=lambda j: (-instance.items[j].beta, _effective_upper(instance, j), j)))


def _prepare(instance: CkInstance) -> _Prepared:
    positions, gamma, beta, upper, gain = [], [], [], [], []
    for j in sort_for_dp(instance):
        it = instance.items[j]
        g0 = min(it.gamma, Fraction(0))
        u = _effective_upper(instance, j)
        g = positive_part(g0 + it.beta * u)
        if u > 0 and g > 0:
            positions.append(j)
            gamma.append(g0)
            beta.append(it.beta)
            upper.append(u)
            gain.append(g)
    offset = sum((positive_part(it.gamma) for it in instance.items), Fraction(0))
    return _Prepared(tuple(positions), tuple(gamma), tuple(beta), tuple(upper),
                     tuple(gain), offset, instance.capacity)


def _gain_lower_bound(prep: _Prepared) -> Fraction:
    if prep.n == 0:
        return Fraction(0)
    order = sorted(range(prep.n), key=lambda k: (-(prep.gain[k] / prep.upper[k]), k))
    best_single = max(prep.gain)
    prefix_gain, prefix_weight, greedy = Fraction(0), Fraction(0), Fraction(0)
    for k in order:
        prefix_weight += prep.upper[k]
        if prefix_weight > prep.capacity:
            break
        prefix_gain += prep.gain[k]
        greedy = prefix_gain
    return max(best_single, greedy)


def profit_lower_bound(instance: CkInstance) -> Fraction:
    """Best of the most profitable single item and the longest density-ordered
    prefix that fits (plus the constant part of every item)."""
    prep = _prepare(instance)
    return prep.offset + _gain_lower_bound(prep)


def profit_upper_bound(instance: CkInstance) -> Fraction:
    prep = _prepare(instance)
    g_min = _gain_lower_bound(prep)
    return prep.offset + min(2 * g_min, sum(prep.gain, Fraction(0)))


# ---------------------------------------------------------------------------
# profit scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfitScaling:
    """Integer profits for the DP.

    One scaled unit is worth ``unit`` in real profit. ``profits`` follow the
    slope order of :func:`sort_for_dp` restricted to items with positive gain;
    ``bound`` is the largest profit level tabulated.
    """

    mode: str  # "exact" | "approximate"
    unit: Fraction
    profits: tuple[int, ...]
    bound: int
    epsilon: Fraction | None = None

    @property
    def scale(self) -> int | None:
        inv = 1 / self.unit
        return inv.numerator if inv.denominator == 1 else None

    @property
    def exact(self) -> bool:
        return self.mode == "exact"


def exact_scaling(instance: CkInstance) -> ProfitScaling:
    prep = _prepare(instance)
    s = lcm_of_denominators(prep.gain)
    profits = tuple(int(g * s) for g in prep.gain)
    g_min = _gain_lower_bound(prep)
    bound = min(math.ceil(2 * g_min * s), sum(profits))
    return ProfitScaling("exact", Fraction(1, s), profits, bound)


def approximate_scaling(instance: CkInstance, epsilon) -> ProfitScaling:
    eps = as_rational(epsilon)
    if not 0 < eps < 1:
        raise EpsilonOutOfRange(f"epsilon must lie in (0, 1), got {epsilon}")
    prep = _prepare(instance)
    if prep.n == 0:
        return ProfitScaling("approximate", Fraction(1), (), 0, eps)
    g_min = _gain_lower_bound(prep)
    k = eps * g_min / prep.n
    profits = tuple(math.floor(g / k) for g in prep.gain)
    p_bar = min(2 * g_min, sum(prep.gain, Fraction(0)))
    bound = min(math.floor(p_bar / k), sum(profits))
    return ProfitScaling("approximate", k, profits, bound, eps)


# ---------------------------------------------------------------------------
# least-weight table
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DpTable:
    """Least weights ``zeta(P, k)`` for ``P = 0..bound`` and ``k = 0..n``.

    ``weights`` holds integers in units of ``1 / weight_scale``; the value
    ``capacity_units + 1`` tags entries that are infeasible (no subset reaches
    ``P`` within capacity). ``take[P, k]`` records whether item ``k`` (1-based
    column) was included at that state.
    """

    weights: np.ndarray
    take: np.ndarray
    profit_bound: int
    weight_scale: int
    capacity_units: int
    scaling: ProfitScaling
    positions: tuple[int, ...]

    @property
    def sentinel(self) -> int:
        return self.capacity_units + 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def is_feasible(self, p: int, k: int) -> bool:
        return int(self.weights[p, k]) != self.sentinel

    def weight(self, p: int, k: int):
        if not self.is_feasible(p, k):
            return INFEASIBLE
        return Fraction(int(self.weights[p, k]), self.weight_scale)

    def column(self, k: int) -> list:
        return [self.weight(p, k) for p in range(self.profit_bound + 1)]

    def reconstruct(self, p: int, k: int) -> list[int]:
        """Sorted positions (0-based) of a least-weight subset for state
        ``(p, k)``."""
        chosen = []
        profits = self.scaling.profits
        while k > 0:
            if self.take[p, k]:
                chosen.append(k - 1)
                p = max(0, p - profits[k - 1])
            k -= 1
        if p != 0 and not self.is_feasible(p, 0):
            raise AssertionError("reconstruction ended at an infeasible state")
        return chosen[::-1]


def _build(prep: _Prepared, scaling: ProfitScaling, max_cells: int) -> DpTable:
    n, bound = prep.n, scaling.bound
    if len(scaling.profits) != n:
        raise ValueError("scaling does not match the instance")
    cells = (bound + 1) * (n + 1)
    if cells > max_cells:
        raise ProfitBoundOverflow(
            f"table would need {cells} cells (profit bound {bound}, {n} items); cap is {max_cells}")
    w = lcm_of_denominators(list(prep.upper) + [prep.capacity])
    u_int = [int(u * w) for u in prep.upper]
    cap = int(prep.capacity * w)
    sentinel = cap + 1
    dtype = np.int64 if sentinel + max(u_int, default=0) < 2 ** 62 else object
    weights = np.full((bound + 1, n + 1), sentinel, dtype=dtype)
    take = np.zeros((bound + 1, n + 1), dtype=bool)
    weights[0, 0] = 0
    for k in range(1, n + 1):
        prev = weights[:, k - 1]
        p = scaling.profits[k - 1]
        shifted = np.empty_like(prev)
        head = min(p, bound) + 1
        shifted[:head] = prev[0]
        if head <= bound:
            shifted[head:] = prev[1:bound + 1 - p]
        incl = np.minimum(shifted + u_int[k - 1], sentinel)
        chosen = incl < prev
        take[:, k] = chosen
        weights[:, k] = np.where(chosen, incl, prev)
    return DpTable(weights, take, bound, w, cap, scaling, prep.positions)


def build_dp_table(instance: CkInstance, scaling: ProfitScaling | None = None,
                   max_cells: int = DEFAULT_MAX_CELLS) -> DpTable:
    """Tabulate least weights once for all profit levels and item prefixes."""
    if scaling is None:
        scaling = exact_scaling(instance)
    return _build(_prepare(instance), scaling, max_cells)


# ---------------------------------------------------------------------------
# sweep over the fractional item
# ---------------------------------------------------------------------------

def _sweep(prep: _Prepared, table: DpTable) -> tuple[int | None, int]:
    """Best (fractional position or None, profit level) pair.

    Candidates are screened in floating point and the near-best ones are
    compared exactly.
    """
    n, bound = prep.n, table.profit_bound
    unit = table.scaling.unit
    levels = np.arange(bound + 1, dtype=float) * float(unit)
    cap, w = table.capacity_units, table.weight_scale

    def float_values(f):
        col = table.weights[:, n if f is None else f]
        feasible = col != table.sentinel
        if f is None:
            vals = levels.copy()
        else:
            resid = (cap - col.astype(float)) / w
            x = np.clip(resid, 0.0, float(prep.upper[f]))
            vals = levels + np.maximum(0.0, float(prep.gamma[f]) + float(prep.beta[f]) * x)
        vals[~feasible] = -np.inf
        return vals

    sweep_order = [None] + list(range(n - 1, -1, -1))
    per_f = {f: float_values(f) for f in sweep_order}
    top = max(float(v.max()) for v in per_f.values())
    tol = 1e-9 * max(1.0, abs(top))

    best, best_key = None, None
    for f in sweep_order:
        for p in np.flatnonzero(per_f[f] >= top - tol):
            p = int(p)
            val = p * unit
            if f is not None:
                zeta = Fraction(int(table.weights[p, f]), w)
                val += prep.gain_at(f, max(Fraction(0), min(prep.upper[f], prep.capacity - zeta)))
            if best is None or val > best:
                best, best_key = val, (f, p)
    return best_key


def _solution(instance: CkInstance, prep: _Prepared, table: DpTable, f, p) -> CkSolution:
    k = prep.n if f is None else f
    chosen = table.reconstruct(p, k)
    x = [Fraction(0)] * instance.n
    used = Fraction(0)
    for pos in chosen:
        x[prep.positions[pos]] = prep.upper[pos]
        used += prep.upper[pos]
    if used > prep.capacity:
        raise AssertionError("reconstructed subset exceeds capacity")
    if f is not None:
        xf = max(Fraction(0), min(prep.upper[f], prep.capacity - used))
        if prep.gain_at(f, xf) > 0:
            x[prep.positions[f]] = xf
    return ck_solution_from_x(instance, x, profit_bound=table.profit_bound)


def _solve(instance: CkInstance, scaling: ProfitScaling, max_cells: int) -> CkSolution:
    prep = _prepare(instance)
    if prep.n == 0:
        return ck_solution_from_x(instance, [Fraction(0)] * instance.n, profit_bound=0)
    table = _build(prep, scaling, max_cells)
    f, p = _sweep(prep, table)
    return _solution(instance, prep, table, f, p)


def solve_dp(instance: CkInstance, scaling: ProfitScaling | None = None,
             max_cells: int = DEFAULT_MAX_CELLS) -> CkSolution:
    """Optimal extreme-point solution via the shared least-weight table."""
    if scaling is None:
        scaling = exact_scaling(instance)
    if not scaling.exact:
        raise ScalingNotExact("solve_dp needs exact integer profits; use solve_fptas")
    return _solve(instance, scaling, max_cells)


def solve_fptas(instance: CkInstance, epsilon, max_cells: int = DEFAULT_MAX_CELLS) -> CkSolution:
    """Scaling-and-rounding approximation with value >= (1 - epsilon) * optimum.

    The reported value is the exact objective of the returned ``x``.
    """
    scaling = approximate_scaling(instance, epsilon)
    return _solve(instance, scaling, max_cells)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def brute_force_ck(instance: CkInstance) -> CkSolution:
    """Enumerate every full set ``S`` and every choice of at most one partial
    item outside it. Exact; meant as a test oracle."""
    n = instance.n
    if n > BRUTE_FORCE_MAX_ITEMS:
        raise TooLarge(f"brute force limited to {BRUTE_FORCE_MAX_ITEMS} items, got {n}")
    if n == 0:
        return ck_solution_from_x(instance, [])
    items = instance.items
    w = lcm_of_denominators([it.upper for it in items] + [instance.capacity])
    q = lcm_of_denominators([it.gamma for it in items] + [it.beta for it in items])
    # value of item j at x = t / w, times q * w: max(0, A_j + B_j t)
    a = [int(it.gamma * q * w) for it in items]
    b = [int(it.beta * q) for it in items]
    up = [int(it.upper * w) for it in items]
    cap = int(instance.capacity * w)
    magnitude = sum(abs(aj) + bj * uj for aj, bj, uj in zip(a, b, up)) + cap + sum(up)
    dtype = np.int64 if magnitude < 2 ** 60 else object

    def val(j, t):
        return np.maximum(0, a[j] + b[j] * t) if isinstance(t, np.ndarray) else max(0, a[j] + b[j] * t)

    base = sum(val(j, 0) for j in range(n))
    weight = np.zeros(1, dtype=dtype)
    gain = np.zeros(1, dtype=dtype)
    for j in range(n):
        weight = np.concatenate([weight, weight + up[j]])
        gain = np.concatenate([gain, gain + (val(j, up[j]) - val(j, 0))])
    masks = np.arange(1 << n)
    fits = weight <= cap

    best_val = np.where(fits, gain, -1).max()
    best = (None, int(np.flatnonzero(fits & (gain == best_val))[0]))
    for f in range(n):
        usable = fits & (((masks >> f) & 1) == 0)
        t = np.minimum(up[f], np.where(usable, cap - weight, 0))
        cand = np.where(usable, gain + val(f, t) - val(f, 0), -1)
        top = cand.max()
        if top > best_val:
            best_val = top
            best = (f, int(np.flatnonzero(cand == top)[0]))

    f, mask = best
    x = [items[j].upper if mask >> j & 1 else Fraction(0) for j in range(n)]
    if f is not None:
        xf = min(items[f].upper, instance.capacity - sum(x, Fraction(0)))
        if items[f].profit(xf) > items[f].profit(0):
            x[f] = xf
    sol = ck_solution_from_x(instance, x)
    assert sol.value * q * w == int(base + best_val)
    return sol


# ---------------------------------------------------------------------------
# SOS-2 model export
# ---------------------------------------------------------------------------

def _sos2_points(item) -> list[Fraction]:
    kink = min(max(item.breakpoint, Fraction(0)), item.upper)
    return sorted({Fraction(0), kink, item.upper})


def sos2_model(instance: CkInstance) -> LinearModel:
    """Breakpoint formulation: per item, convex weights on the points
    ``0``, ``min(breakpoint, u)`` and ``u`` with an SOS-2 restriction."""
    model = LinearModel(name=f"ck-sos2 {instance.name}".strip(), sense="max")
    capacity_row: dict[str, Fraction] = {}
    for j, it in enumerate(instance.items):
        points = _sos2_points(it)
        names = []
        for k, xk in enumerate(points):
            name = model.add_variable(f"t_{j}_{k}", 0, 1)
            names.append(name)
            coef = it.profit(xk)
            if coef:
                model.objective[name] = coef
            if xk:
                capacity_row[name] = xk
        model.add_constraint(f"convex_{j}", {name: 1 for name in names}, "=", 1)
        model.sos.append(SosSet(f"sos_{j}", 2, [(name, k + 1) for k, name in enumerate(names)]))
    model.constraints.insert(0, Constraint("capacity", capacity_row, "<=", instance.capacity))
    return model


def export_sos2(instance: CkInstance, path) -> Path:
    return write_lp(sos2_model(instance), path)


def sos2_solution_x(instance: CkInstance, values: dict[str, float]) -> list[float]:
    """Map breakpoint weights from a solver back to item amounts (floats)."""
    x = []
    for j, it in enumerate(instance.items):
        points = _sos2_points(it)
        x.append(sum(float(p) * values.get(f"t_{j}_{k}", 0.0) for k, p in enumerate(points)))
    return x
