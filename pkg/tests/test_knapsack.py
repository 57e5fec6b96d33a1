import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_ck
from rebpack.errors import EpsilonOutOfRange, ProfitBoundOverflow, ScalingNotExact, TooLarge
from rebpack.knapsack import (
    INFEASIBLE,
    approximate_scaling,
    brute_force_ck,
    build_dp_table,
    exact_scaling,
    profit_lower_bound,
    profit_upper_bound,
    solve_dp,
    solve_fptas,
    sort_for_dp,
    sos2_model,
    sos2_solution_x,
)
from rebpack.lpfile import format_lp, parse_lp
from rebpack.model import CkInstance, CkItem
from rebpack.oracles import subset_sum_reduction


def three_items(capacity=5):
    return CkInstance((CkItem(-2, 2, 3), CkItem(-1, 1, 4), CkItem(0, 1, 2)), capacity)


# -- bounds ------------------------------------------------------------------

def test_lower_bound_example():
    # density order is items 0, 2, 1; prefix {0, 2} fits with gain 4 + 2
    assert profit_lower_bound(three_items()) == 6


def test_upper_bound_example():
    assert profit_upper_bound(three_items()) == 9


def test_single_item_bounds():
    inst = CkInstance((CkItem(-3, 2, 5),), 10)
    assert profit_lower_bound(inst) == 7
    assert 7 <= profit_upper_bound(inst) <= 14


def test_empty_instance_bounds():
    inst = CkInstance((), 3)
    assert profit_lower_bound(inst) == 0 and profit_upper_bound(inst) == 0
    assert solve_dp(inst).value == 0


def test_zero_capacity_bound_is_constant_part():
    # a positive-gamma item keeps its value at x = 0; nothing else fits
    inst = CkInstance((CkItem(3, 1, 4), CkItem(-1, 2, 5)), 0)
    assert profit_lower_bound(inst) == 3 == solve_dp(inst).value


# -- ordering and table --------------------------------------------------------

def test_sort_by_slope():
    inst = CkInstance((CkItem(0, 1, 1), CkItem(0, 3, 1), CkItem(0, 2, 1)), 10)
    assert sort_for_dp(inst) == (1, 2, 0)


def test_sort_ties_smaller_bound_first():
    inst = CkInstance((CkItem(0, 2, 5), CkItem(0, 2, 1)), 10)
    assert sort_for_dp(inst) == (1, 0)


def test_sort_identity_when_sorted():
    inst = CkInstance((CkItem(0, 3, 1), CkItem(0, 2, 1), CkItem(0, 1, 1)), 10)
    assert sort_for_dp(inst) == (0, 1, 2)


def test_one_item_column():
    inst = CkInstance((CkItem(0, Fraction(3, 2), 2),), 5)
    table = build_dp_table(inst)
    assert table.profit_bound == 3
    assert table.column(1) == [0, 2, 2, 2]
    assert table.column(0) == [0, INFEASIBLE, INFEASIBLE, INFEASIBLE]


def test_two_item_table_entries():
    # scaled profits (2, 2) with bounds (1, 4)
    inst = CkInstance((CkItem(0, 2, 1), CkItem(0, Fraction(1, 2), 4)), 10)
    table = build_dp_table(inst)
    assert table.scaling.profits == (2, 2) and table.profit_bound == 4
    assert table.weight(4, 2) == 5 and table.weight(2, 2) == 1
    assert table.column(2) == [0, 1, 1, 5, 5]


def test_unreachable_profit_is_infeasible():
    inst = CkInstance((CkItem(0, 2, 1), CkItem(0, Fraction(1, 2), 4)), 10)
    table = build_dp_table(inst)
    assert not table.is_feasible(3, 1)


def _assert_monotone(table):
    big = table.sentinel
    w = table.weights
    rows, cols = w.shape
    for k in range(cols):
        assert w[0, k] == 0
        assert all(w[p, k] <= w[p + 1, k] or w[p + 1, k] == big for p in range(rows - 1))
    for p in range(rows):
        assert all(w[p, k + 1] <= w[p, k] for k in range(cols - 1))
    assert all(w[p, 0] == big for p in range(1, rows))


def test_table_monotonicity_random():
    rng = random.Random(11)
    for _ in range(100):
        inst = random_ck(rng, n_max=8)
        if inst.n:
            _assert_monotone(build_dp_table(inst))


def test_table_cap_raises():
    inst = CkInstance(tuple(CkItem(0, 1, 1000) for _ in range(3)), 3000)
    with pytest.raises(ProfitBoundOverflow):
        build_dp_table(inst, max_cells=100)


# -- exact DP --------------------------------------------------------------------

def test_dp_example():
    sol = solve_dp(three_items())
    assert sol.value == 6
    assert three_items().objective(sol.x) == 6
    assert sol.value == brute_force_ck(three_items()).value


def test_subset_sum_yes_instance():
    assert solve_dp(subset_sum_reduction((1, 2, 3), 4)).value == 4


def test_subset_sum_no_instance():
    # brute force gives 2; it must stay below the target 3
    inst = subset_sum_reduction((2, 4, 5), 3)
    assert solve_dp(inst).value == brute_force_ck(inst).value == 2


def test_dp_refuses_approximate_scaling():
    inst = three_items()
    with pytest.raises(ScalingNotExact):
        solve_dp(inst, approximate_scaling(inst, Fraction(1, 2)))


def test_rational_data():
    inst = CkInstance((CkItem(Fraction(-1, 3), Fraction(5, 7), Fraction(3, 2)),
                       CkItem(Fraction(-2, 5), Fraction(1, 2), Fraction(7, 3))), Fraction(5, 2))
    assert solve_dp(inst).value == brute_force_ck(inst).value


def test_exact_scaling_uses_common_denominator():
    inst = CkInstance((CkItem(0, Fraction(1, 2), 1), CkItem(0, Fraction(1, 3), 1)), 5)
    assert exact_scaling(inst).scale == 6


def test_capacity_exhausted_when_marginal_profit_positive():
    rng = random.Random(5)
    for _ in range(200):
        inst = random_ck(rng, n_max=8)
        sol = solve_dp(inst)
        growing = [j for j, (x, it) in enumerate(zip(sol.x, inst.items))
                   if x < it.upper and x >= it.breakpoint]
        if growing:
            assert sum(sol.x) == inst.capacity


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.integers(-30, 10), st.integers(1, 9), st.integers(1, 12)),
                min_size=1, max_size=7),
       st.integers(0, 60))
def test_dp_matches_brute_force(items, capacity):
    inst = CkInstance(tuple(CkItem(*t) for t in items), capacity)
    sol = solve_dp(inst)
    assert sol.value == brute_force_ck(inst).value
    assert inst.is_feasible(sol.x)
    assert sol.interior_count(inst) <= 1


# -- FPTAS -----------------------------------------------------------------------

def test_fptas_example():
    sol = solve_fptas(three_items(), Fraction(1, 2))
    assert sol.value >= 3


def test_fptas_fine_epsilon_is_exact():
    # K * n < 1 with integer gains loses nothing
    inst = three_items()
    assert solve_fptas(inst, Fraction(1, 100)).value == 6


def test_fptas_single_item_exact():
    inst = CkInstance((CkItem(-3, 2, 5),), 4)
    assert solve_fptas(inst, Fraction(1, 2)).value == solve_dp(inst).value


@pytest.mark.parametrize("eps", [0, 1, Fraction(3, 2), -1])
def test_fptas_epsilon_range(eps):
    with pytest.raises(EpsilonOutOfRange):
        solve_fptas(three_items(), eps)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-50, 10), st.integers(1, 20), st.integers(1, 30)),
                min_size=1, max_size=8),
       st.integers(0, 100), st.sampled_from([Fraction(1, 2), Fraction(1, 10), Fraction(1, 100)]))
def test_fptas_guarantee(items, capacity, eps):
    inst = CkInstance(tuple(CkItem(*t) for t in items), capacity)
    best = solve_dp(inst).value
    sol = solve_fptas(inst, eps)
    assert inst.is_feasible(sol.x)
    assert sol.value >= (1 - eps) * best


# -- brute force -------------------------------------------------------------------

def test_brute_force_zero_capacity():
    inst = CkInstance((CkItem(2, 1, 3), CkItem(-1, 1, 3), CkItem(5, 2, 1)), 0)
    assert brute_force_ck(inst).value == 7


def test_brute_force_single_item_endpoint():
    inst = CkInstance((CkItem(-4, 2, 6),), 3)
    assert brute_force_ck(inst).value == max(0, 2)


def test_brute_force_guard():
    inst = CkInstance(tuple(CkItem(0, 1, 1) for _ in range(23)), 5)
    with pytest.raises(TooLarge):
        brute_force_ck(inst)


# -- SOS-2 export -------------------------------------------------------------------

def test_sos2_counts():
    lp = sos2_model(three_items())
    # the third item has gamma = 0 and keeps two breakpoints
    assert len(lp.variables) == 8
    assert len(lp.sos) == 3
    assert len(lp.constraints) == 4


def test_sos2_positive_gamma_collapses():
    lp = sos2_model(CkInstance((CkItem(1, 1, 3),), 2))
    assert [name for name, _ in lp.sos[0].members] == ["t_0_0", "t_0_1"]


def test_sos2_round_trip():
    lp = sos2_model(three_items())
    back = parse_lp(format_lp(lp))
    assert back.sense == "max" and len(back.sos) == 3
    assert back.row("capacity").rhs == 5


def test_sos2_optimum_matches_dp_when_evaluated():
    inst = three_items()
    sol = solve_dp(inst)
    # put weight on the breakpoints of the optimal x
    values = {}
    lp = sos2_model(inst)
    for j, x in enumerate(sol.x):
        names = [n for n, _ in lp.sos[j].members]
        if x == 0:
            values[names[0]] = 1
        else:
            values[names[-1]] = 1
    assert lp.violations(values, tol=0) == []
    assert lp.evaluate(values) == sol.value
    assert sos2_solution_x(inst, values) == [float(v) for v in sol.x]
