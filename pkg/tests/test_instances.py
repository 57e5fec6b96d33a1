import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rebpack.errors import BadSpec, ParseError, VersionMismatch
from rebpack.instances import (
    CkGenSpec,
    RebpGenSpec,
    budget_ratio,
    format_instance,
    format_schedule,
    gen_ck,
    gen_rebp,
    instance_path,
    parse_instance,
    parse_schedule,
    read_instance,
    write_instance,
)


def test_ck_formula_for_drawn_profit():
    inst = gen_ck(CkGenSpec(n=20, R=100, experiment=3, seed=4))
    for it in inst.items:
        p = it.beta
        assert it.upper == math.ceil(p + Fraction(100, 10))
        assert it.gamma == -(it.upper - 1) * p
        assert it.full_profit == p
        assert 0 <= it.breakpoint < it.upper


def test_ck_budget_first_experiment():
    inst = gen_ck(CkGenSpec(n=5, R=100, experiment=1, seed=0))
    assert inst.capacity == Fraction(8, 101) * sum(it.upper for it in inst.items)


def test_budget_ratio_range():
    ratios = [budget_ratio(i) for i in range(1, 31)]
    assert min(ratios) == Fraction(8, 101) and max(ratios) == Fraction(95, 101)


def test_ck_seed_determinism():
    spec = CkGenSpec(n=10, R=1000, experiment=7, seed=9)
    assert format_instance(gen_ck(spec)) == format_instance(gen_ck(spec))
    assert gen_ck(spec) != gen_ck(CkGenSpec(n=10, R=1000, experiment=7, seed=10))


@pytest.mark.parametrize("spec", [CkGenSpec(0), CkGenSpec(3, R=1), CkGenSpec(3, experiment=31)])
def test_ck_bad_spec(spec):
    with pytest.raises(BadSpec):
        gen_ck(spec)


def test_rebp_formulas():
    inst = gen_rebp(RebpGenSpec(nominal=(10, 10, 10, 10)))
    assert inst.deviation == (4, 4, 4, 4)
    assert inst.capacity == 7
    assert inst.budget == Fraction(8, 5)
    assert inst.rates == (Fraction(3, 14),) * 4 and inst.equal_rates
    assert inst.max_nominal == 10


def test_rebp_synthetic_durations_within_range():
    inst = gen_rebp(RebpGenSpec(m=30, a_max=20, seed=1))
    assert all(1 <= a <= 20 for a in inst.nominal)
    assert inst.n == 30


def test_rebp_empty_durations():
    with pytest.raises(BadSpec):
        gen_rebp(RebpGenSpec(nominal=()))


def test_round_trip_generated_ck(tmp_path):
    inst = gen_ck(CkGenSpec(n=8, R=100, experiment=5, seed=2))
    path = write_instance(inst, tmp_path / "a.ck")
    assert read_instance(path) == inst


def test_round_trip_rebp_rational(tmp_path):
    inst = gen_rebp(RebpGenSpec(nominal=(Fraction(7, 3), 5, Fraction(1, 2)), bins=2, name="x y"))
    back = read_instance(write_instance(inst, tmp_path / "b.rebp"))
    assert back == inst and back.name == "x y"


def test_corrupted_header():
    with pytest.raises(ParseError):
        parse_instance("formt rebp v1\n")
    with pytest.raises(VersionMismatch):
        parse_instance("format rebp v0\n")


def test_unknown_key_rejected():
    text = format_instance(gen_rebp(RebpGenSpec(nominal=(1, 2)))) + "colour blue\n"
    with pytest.raises(ParseError):
        parse_instance(text)


def test_missing_key_rejected():
    with pytest.raises(ParseError):
        parse_instance("format rebp v1\nbins 1\ncapacity 3\nitem 1 1\n")


def test_rebp_file_feeds_the_solver(tmp_path):
    from rebpack.rcg import solve_rebp
    path = tmp_path / "three.rebp"
    path.write_text("format rebp v1\nbins 2\ncapacity 6\nbudget 1\nrates 1 1\n"
                    "item 4 1\nitem 4 1\nitem 4 1\n")
    assert solve_rebp(read_instance(path)).objective == 5


def test_schedule_round_trip():
    sched = parse_schedule(format_schedule([0, 1, 0], Fraction(5, 2)))
    assert sched.bins == (0, 1, 0) and sched.theta == Fraction(5, 2)


def test_versioned_layout(tmp_path):
    assert instance_path(tmp_path, "ck", "a") == tmp_path / "v1" / "ck" / "a.ck"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.fractions(Fraction(1, 10), 50, max_denominator=20), min_size=1, max_size=8))
def test_rebp_generator_exact(nominal):
    inst = gen_rebp(RebpGenSpec(nominal=tuple(nominal)))
    assert all(d == Fraction(2, 5) * a for a, d in zip(inst.nominal, inst.deviation))
    assert inst.capacity == sum(a + d for a, d in zip(inst.nominal, inst.deviation)) / 8
    assert inst.budget == sum(inst.deviation) / 10
    assert inst.rates[0] == Fraction(3, 2) / inst.capacity
    assert parse_instance(format_instance(inst)) == inst
