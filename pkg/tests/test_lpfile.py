from fractions import Fraction

import pytest

from rebpack.errors import ParseError
from rebpack.lpfile import (
    LinearModel,
    SosSet,
    format_lp,
    format_solution,
    parse_lp,
    parse_solution,
)


def small_model():
    lp = LinearModel(name="demo", sense="max")
    lp.add_variable("x", 0, 4)
    lp.add_variable("y", kind="binary")
    lp.add_variable("w", None, None)
    lp.add_variable("k", 0, 10, kind="integer")
    lp.objective = {"x": Fraction(3, 2), "y": -1, "k": 1}
    lp.add_constraint("c1", {"x": 1, "y": -2, "w": Fraction(1, 4)}, "<=", 7)
    lp.add_constraint("c2", {"x": -1, "k": 1}, ">=", -3)
    lp.add_constraint("c3", {"y": 1, "k": 1}, "=", 1)
    lp.sos.append(SosSet("s", 2, [("x", 1), ("k", 2)]))
    return lp


def test_round_trip():
    lp = small_model()
    back = parse_lp(format_lp(lp))
    assert back.name == "demo" and back.sense == "max"
    assert back.objective == {"x": 1.5, "y": -1.0, "k": 1.0}
    assert [r.name for r in back.constraints] == ["c1", "c2", "c3"]
    c1 = back.row("c1")
    assert c1.coeffs == {"x": 1.0, "y": -2.0, "w": 0.25} and c1.sense == "<=" and c1.rhs == 7
    assert back.row("c2").rhs == -3
    assert back.variables["y"].kind == "binary"
    assert back.variables["k"].kind == "integer" and back.variables["k"].upper == 10
    assert back.variables["w"].lower is None and back.variables["w"].upper is None
    assert back.variables["x"].upper == 4
    assert back.sos[0].kind == 2 and [n for n, _ in back.sos[0].members] == ["x", "k"]


def test_rows_may_span_lines():
    text = "Minimize\n obj: x + 2 y\nSubject To\n r1: x\n + y >= 1\n r2: - x - y >= -5\nEnd\n"
    lp = parse_lp(text)
    assert lp.row("r1").coeffs == {"x": 1.0, "y": 1.0}
    assert lp.row("r2").coeffs == {"x": -1.0, "y": -1.0} and lp.row("r2").rhs == -5


def test_unlabelled_row_rejected():
    with pytest.raises(ParseError):
        parse_lp("Minimize\n obj: x\nSubject To\n x >= 1\nEnd\n")


def test_missing_end_rejected():
    with pytest.raises(ParseError):
        parse_lp("Minimize\n obj: x\n")


def test_violations_exact():
    lp = small_model()
    good = {"x": 1, "y": 0, "w": 0, "k": 1}
    assert lp.violations(good, tol=0) == []
    assert "c3" in lp.violations({"x": 1, "y": 1, "w": 0, "k": 1}, tol=0)


def test_sos_violation_detected():
    lp = LinearModel()
    for v in "abc":
        lp.add_variable(v, 0, 1)
    lp.sos.append(SosSet("s", 2, [("a", 1), ("b", 2), ("c", 3)]))
    assert lp.violations({"a": 0.5, "b": 0.5}) == []
    assert lp.violations({"a": 0.5, "c": 0.5}) == ["s"]


def test_solution_file_round_trip():
    text = format_solution({"x": 1, "y": Fraction(1, 2)}, objective=3, status="optimal", gap=0)
    sol = parse_solution(text)
    assert sol.status == "optimal" and sol.objective == 3 and sol.gap == 0
    assert sol.values == {"x": 1.0, "y": 0.5}


def test_bad_solution_line():
    with pytest.raises(ParseError):
        parse_solution("x 1 2\n")
