"""Brute-force references for small instances.

Nothing here shares code with the dynamic programs or the generation loop
beyond the instance types, so agreement with them is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from rebpack.errors import BadInstance, TooLarge
from rebpack.knapsack import brute_force_ck  # noqa: F401  (re-exported)
from rebpack.model import (
    CkInstance,
    CkItem,
    RebpInstance,
    Scenario,
    as_rational,
    lcm_of_denominators,
)

MAX_VERTEX_ITEMS = 12
MAX_ROBUST_ITEMS = 8
MAX_ROBUST_BINS = 4
MAX_SUBSET_SUM = 10**6


# ---------------------------------------------------------------------------
# vertices of the budgeted uncertainty set
# ---------------------------------------------------------------------------

def enumerate_uomega_vertices(deviation: Sequence, budget) -> Iterator[Scenario]:
    """Vertices of ``{a : 0 <= a <= deviation, sum(a) <= budget}``.

    These are the box corners within budget plus, for each such corner and
    each coordinate outside it that would overshoot the budget, the point
    where that coordinate absorbs the remaining budget. Every convex
    function attains its maximum over the set at one of them.
    """
    dev = [as_rational(v) for v in deviation]
    omega = as_rational(budget)
    m = len(dev)
    if m > MAX_VERTEX_ITEMS:
        raise TooLarge(f"vertex enumeration handles at most {MAX_VERTEX_ITEMS} items, got {m}")
    if omega < 0:
        raise BadInstance("budget must be nonnegative")
    seen = set()
    for size in range(m + 1):
        for subset in combinations(range(m), size):
            mass = sum((dev[i] for i in subset), Fraction(0))
            if mass > omega:
                continue
            corner = [Fraction(0)] * m
            for i in subset:
                corner[i] = dev[i]
            point = tuple(corner)
            if point not in seen:
                seen.add(point)
                yield Scenario(point)
            for i in range(m):
                if i not in subset and mass < omega < mass + dev[i]:
                    partial = list(corner)
                    partial[i] = omega - mass
                    point = tuple(partial)
                    if point not in seen:
                        seen.add(point)
                        yield Scenario(point)


def worst_case_by_vertices(instance: RebpInstance, bins: Sequence[int]) -> tuple[Fraction, Scenario]:
    """Largest total overtime of a fixed assignment over the vertex set."""
    best = None
    used = set(bins)
    for a in enumerate_uomega_vertices(instance.deviation, instance.budget):
        loads = [Fraction(0)] * instance.n
        for i, j in enumerate(bins):
            loads[j] += instance.nominal[i] + a[i]
        cost = sum((c * max(Fraction(0), load - instance.capacity)
                    for j, (c, load) in enumerate(zip(instance.rates, loads)) if j in used),
                   Fraction(0))
        if best is None or cost > best[0]:
            best = (cost, a)
    return best


# ---------------------------------------------------------------------------
# subset sum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubsetSumResult:
    feasible: bool
    witness: tuple[int, ...] = ()  # item indices

    def __bool__(self):
        return self.feasible


def subset_sum(weights: Sequence[int], target: int) -> SubsetSumResult:
    """Reachability DP over sums; the witness prefers low indices."""
    w = [int(v) for v in weights]
    if any(v != q for v, q in zip(w, weights)) or any(v < 0 for v in w):
        raise BadInstance("subset sum needs nonnegative integers")
    target = int(target)
    total = sum(w)
    if total > MAX_SUBSET_SUM:
        raise TooLarge(f"sum of weights {total} exceeds {MAX_SUBSET_SUM}")
    if target < 0 or target > total:
        return SubsetSumResult(False)
    # reach[k][s]: some subset of items k.. sums to s
    m = len(w)
    reach = np.zeros((m + 1, target + 1), dtype=bool)
    reach[m, 0] = True
    for k in range(m - 1, -1, -1):
        reach[k] = reach[k + 1]
        if w[k] <= target:
            reach[k, w[k]:] |= reach[k + 1, :target + 1 - w[k]]
    if not reach[0, target]:
        return SubsetSumResult(False)
    witness, s = [], target
    for k in range(m):
        if 0 < w[k] <= s and reach[k + 1, s - w[k]]:
            witness.append(k)
            s -= w[k]
    return SubsetSumResult(True, tuple(witness))


def subset_sum_reduction(weights: Sequence[int], target) -> CkInstance:
    """Equal-slope knapsack whose optimum equals ``target`` exactly when some
    subset of ``weights`` sums to it: ``beta = 2``, ``gamma = -w``, ``u = w``."""
    if any(as_rational(v) <= 0 for v in weights):
        raise BadInstance("weights must be positive")
    items = tuple(CkItem(-as_rational(v), Fraction(2), as_rational(v)) for v in weights)
    return CkInstance(items, as_rational(target), name="subset-sum")


# ---------------------------------------------------------------------------
# robust min-max by enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RobustOptimum:
    objective: Fraction
    bins: tuple[int, ...]
    y: tuple[int, ...]
    eta: Fraction
    worst_case: Scenario

    def schedule(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i, j in enumerate(self.bins):
            out.setdefault(j, []).append(i)
        return out


def _assignments(m: int, rates: Sequence) -> np.ndarray:
    """All item-to-bin maps up to relabelling bins of equal rate."""
    classes: dict = {}
    for j, r in enumerate(rates):
        classes.setdefault(r, []).append(j)
    out = []
    cur = [0] * m

    def rec(i, used):
        if i == m:
            out.append(list(cur))
            return
        options = sorted(used)
        for members in classes.values():
            fresh = [j for j in members if j not in used]
            if fresh:
                options.append(fresh[0])
        for j in options:
            cur[i] = j
            rec(i + 1, used | {j})

    rec(0, frozenset())
    return np.array(out, dtype=np.int64).reshape(len(out), m)


def robust_brute_force(instance: RebpInstance, max_items: int = MAX_ROBUST_ITEMS,
                       max_bins: int = MAX_ROBUST_BINS) -> RobustOptimum:
    """Minimum over assignments of bins used plus worst-case overtime."""
    m, n = instance.m, instance.n
    if m > max_items or n > max_bins:
        raise TooLarge(f"robust enumeration handles m <= {max_items}, n <= {max_bins}")
    vertices = list(enumerate_uomega_vertices(instance.deviation, instance.budget))
    d = lcm_of_denominators(list(instance.nominal) + list(instance.deviation)
                            + [instance.capacity, instance.budget]
                            + [v for a in vertices for v in a])
    e = lcm_of_denominators(c / d for c in instance.rates)
    rates = [int(c * e / d) for c in instance.rates]
    cap = int(instance.capacity * d)
    sizes = [[int((instance.nominal[i] + a[i]) * d) for i in range(m)] for a in vertices]
    top = (sum(max(row) for row in sizes) * m + cap) * max(rates) * n + e * n
    dtype = np.int64 if top < 2**62 else object
    sizes = np.array(sizes, dtype=dtype)  # vertices x items
    assign = _assignments(m, instance.rates)  # K x m
    cost = np.zeros((len(assign), len(vertices)), dtype=dtype)
    opened = np.zeros(len(assign), dtype=np.int64)
    for j in range(n):
        mask = (assign == j).astype(dtype)
        used = mask.any(axis=1) if dtype is not object else np.array(
            [any(row) for row in mask], dtype=bool)
        loads = mask @ sizes.T  # K x vertices
        over = np.where(loads > cap, loads - cap, 0)
        cost += rates[j] * over * used[:, None]
        opened += used
    worst = cost.max(axis=1)
    total = worst + e * opened
    k = int(np.argmin(total))
    v = int(np.argmax(cost[k]))
    bins = tuple(int(b) for b in assign[k])
    y = tuple(1 if j in bins else 0 for j in range(n))
    eta = Fraction(int(worst[k]), e)
    return RobustOptimum(sum(y) + eta, bins, y, eta, vertices[v])


__all__ = ["enumerate_uomega_vertices", "worst_case_by_vertices", "SubsetSumResult",
           "subset_sum", "subset_sum_reduction", "RobustOptimum", "robust_brute_force",
           "brute_force_ck"]
