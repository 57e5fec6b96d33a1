"""A small linear-model container with a CPLEX-LP-format writer and parser.

Only the subset the package emits is understood by the parser:

* ``Maximize`` / ``Minimize`` followed by an (optionally labelled) objective;
* ``Subject To`` where every row starts with a ``label:`` and may span lines;
* ``Bounds`` with one bound statement per line (``lo <= x <= hi``,
  ``x >= lo``, ``x <= hi``, ``x = v``, ``x free``);
* ``Binaries`` / ``Generals`` name lists;
* ``SOS`` rows of the form ``name: S2:: var:weight var:weight ...``;
* ``End``. Backslash starts a comment.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from rebpack.errors import ParseError

Number = float | int | Fraction


@dataclass
class Variable:
    name: str
    lower: Number | None = 0
    upper: Number | None = None
    kind: str = "continuous"  # continuous | binary | integer


@dataclass
class Constraint:
    name: str
    coeffs: dict[str, Number]
    sense: str  # "<=", ">=", "="
    rhs: Number


@dataclass
class SosSet:
    name: str
    kind: int
    members: list[tuple[str, Number]]


@dataclass
class LinearModel:
    name: str = "model"
    sense: str = "min"
    objective: dict[str, Number] = field(default_factory=dict)
    variables: dict[str, Variable] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    sos: list[SosSet] = field(default_factory=list)

    def add_variable(self, name, lower=0, upper=None, kind="continuous") -> str:
        if name in self.variables:
            raise ValueError(f"duplicate variable {name}")
        if kind == "binary":
            lower, upper = 0, 1
        self.variables[name] = Variable(name, lower, upper, kind)
        return name

    def add_constraint(self, name, coeffs, sense, rhs) -> Constraint:
        if sense not in ("<=", ">=", "="):
            raise ValueError(f"bad sense {sense!r}")
        row = Constraint(name, dict(coeffs), sense, rhs)
        self.constraints.append(row)
        return row

    def row(self, name: str) -> Constraint:
        for r in self.constraints:
            if r.name == name:
                return r
        raise KeyError(name)

    def evaluate(self, values: dict[str, Number]) -> Number:
        return sum(c * values.get(v, 0) for v, c in self.objective.items())

    def violations(self, values: dict[str, Number], tol: float = 1e-6) -> list[str]:
        """Names of rows, bounds or SOS sets violated by ``values``."""
        bad = []
        for r in self.constraints:
            lhs = sum(c * values.get(v, 0) for v, c in r.coeffs.items())
            slack = {"<=": r.rhs - lhs, ">=": lhs - r.rhs, "=": -abs(lhs - r.rhs)}[r.sense]
            if slack < -tol:
                bad.append(r.name)
        for var in self.variables.values():
            v = values.get(var.name, 0)
            if var.lower is not None and v < var.lower - tol:
                bad.append(var.name)
            if var.upper is not None and v > var.upper + tol:
                bad.append(var.name)
        for s in self.sos:
            nz = [k for k, (name, _) in enumerate(s.members) if abs(values.get(name, 0)) > tol]
            if len(nz) > s.kind or (nz and nz[-1] - nz[0] >= s.kind):
                bad.append(s.name)
        return bad


# ---------------------------------------------------------------------------
# writer
# ---------------------------------------------------------------------------

def _num(q: Number) -> str:
    if isinstance(q, Fraction) and q.denominator == 1:
        return str(q.numerator)
    if isinstance(q, int):
        return str(q)
    f = float(q)
    if f.is_integer() and abs(f) < 1e15:
        return str(int(f))
    return format(f, ".17g")


def _expr(coeffs: dict[str, Number]) -> str:
    parts = []
    for name, c in coeffs.items():
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = -c if c < 0 else c
        term = name if mag == 1 else f"{_num(mag)} {name}"
        parts.append(f"{sign} {term}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def _wrap(text: str, width: int = 200, indent: str = "   ") -> str:
    if len(text) <= width:
        return text
    out, line = [], ""
    for tok in text.split(" "):
        if line and len(line) + 1 + len(tok) > width:
            out.append(line)
            line = indent + tok
        else:
            line = f"{line} {tok}" if line else tok
    out.append(line)
    return "\n".join(out)


def format_lp(model: LinearModel) -> str:
    buf = io.StringIO()
    buf.write(f"\\ {model.name}\n")
    buf.write("Maximize\n" if model.sense == "max" else "Minimize\n")
    buf.write(" " + _wrap(f"obj: {_expr(model.objective)}") + "\n")
    buf.write("Subject To\n")
    for r in model.constraints:
        buf.write(" " + _wrap(f"{r.name}: {_expr(r.coeffs)} {r.sense} {_num(r.rhs)}") + "\n")
    buf.write("Bounds\n")
    for v in model.variables.values():
        if v.kind == "binary":
            continue
        lo = "-inf" if v.lower is None else _num(v.lower)
        if v.upper is None:
            buf.write(f" {v.name} free\n" if v.lower is None else f" {v.name} >= {lo}\n")
        else:
            buf.write(f" {lo} <= {v.name} <= {_num(v.upper)}\n")
    binaries = [v.name for v in model.variables.values() if v.kind == "binary"]
    if binaries:
        buf.write("Binaries\n " + _wrap(" ".join(binaries)) + "\n")
    generals = [v.name for v in model.variables.values() if v.kind == "integer"]
    if generals:
        buf.write("Generals\n " + _wrap(" ".join(generals)) + "\n")
    if model.sos:
        buf.write("SOS\n")
        for s in model.sos:
            members = " ".join(f"{name}:{_num(w)}" for name, w in s.members)
            buf.write(f" {s.name}: S{s.kind}:: {members}\n")
    buf.write("End\n")
    return buf.getvalue()


def write_lp(model: LinearModel, path) -> Path:
    path = Path(path)
    path.write_text(format_lp(model))
    return path


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_SECTIONS = [
    (re.compile(r"^(maximize|maximise|maximum|max)$", re.I), "max"),
    (re.compile(r"^(minimize|minimise|minimum|min)$", re.I), "min"),
    (re.compile(r"^(subject\s+to|such\s+that|st|s\.t\.)$", re.I), "rows"),
    (re.compile(r"^bounds?$", re.I), "bounds"),
    (re.compile(r"^(binaries|binary|bin)$", re.I), "binaries"),
    (re.compile(r"^(generals|general|gen|integers)$", re.I), "generals"),
    (re.compile(r"^sos$", re.I), "sos"),
    (re.compile(r"^end$", re.I), "end"),
]

_NAME = r"[A-Za-z_][\w.\[\]]*"
_TOKEN = re.compile(
    r"\s*(?:(?P<op><=|=<|>=|=>|<|>|=)|(?P<sign>[+-])|"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|inf(?:inity)?)|(?P<name>" + _NAME + r"))",
    re.I)
_LABEL = re.compile(r"(" + _NAME + r")\s*:(?!:)")
_OPS = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "="}


def _tokens(text: str) -> list[tuple[str, str]]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected text near {text[pos:pos + 20]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


def _to_number(tok: str) -> float:
    if tok.lower().startswith("inf"):
        return math.inf
    return float(tok)


def _parse_expr(tokens: list[tuple[str, str]]) -> tuple[dict[str, float], float]:
    """Linear expression -> (coefficients, constant)."""
    coeffs: dict[str, float] = {}
    const = 0.0
    sign, coef, i = 1.0, None, 0
    while i < len(tokens):
        kind, val = tokens[i]
        if kind == "sign":
            if coef is not None:
                const += sign * coef
                sign, coef = 1.0, None
            if val == "-":
                sign = -sign
        elif kind == "num":
            if coef is not None:
                raise ParseError(f"two numbers in a row near {val!r}")
            coef = _to_number(val)
        elif kind == "name":
            coeffs[val] = coeffs.get(val, 0.0) + sign * (1.0 if coef is None else coef)
            sign, coef = 1.0, None
        else:
            raise ParseError(f"unexpected operator {val!r} in expression")
        i += 1
    if coef is not None:
        const += sign * coef
    return coeffs, const


def _parse_row(label: str, body: str) -> Constraint:
    toks = _tokens(body)
    ops = [k for k, (kind, _) in enumerate(toks) if kind == "op"]
    if len(ops) != 1:
        raise ParseError(f"row {label!r} needs exactly one relational operator")
    k = ops[0]
    lhs, c1 = _parse_expr(toks[:k])
    rhs_coeffs, c2 = _parse_expr(toks[k + 1:])
    if rhs_coeffs:
        for name, c in rhs_coeffs.items():
            lhs[name] = lhs.get(name, 0.0) - c
    return Constraint(label, lhs, _OPS[toks[k][1]], c2 - c1)


def _section_of(line: str):
    for pattern, name in _SECTIONS:
        if pattern.match(line):
            return name
    return None


def parse_lp(text: str) -> LinearModel:
    model = LinearModel()
    chunks: dict[str, list[str]] = {}
    section = None
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    if first.startswith("\\"):
        model.name = first[1:].strip() or model.name
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        sec = _section_of(line)
        if sec is not None:
            if sec == "end":
                section = "end"
                break
            if sec in ("max", "min"):
                model.sense = sec
                sec = "objective"
            section = sec
            chunks.setdefault(section, [])
            continue
        if section is None:
            raise ParseError(f"content before any section: {line!r}")
        chunks[section].append(line)
    if section != "end":
        raise ParseError("missing End")
    if "objective" not in chunks:
        raise ParseError("missing objective section")

    obj_text = " ".join(chunks["objective"])
    m = _LABEL.match(obj_text)
    if m:
        obj_text = obj_text[m.end():]
    coeffs, _ = _parse_expr(_tokens(obj_text))
    model.objective = coeffs

    names: dict[str, Variable] = {}

    def var(name):
        if name not in names:
            names[name] = Variable(name)
        return names[name]

    for name in coeffs:
        var(name)

    rows_text = " ".join(chunks.get("rows", []))
    pieces = _LABEL.split(rows_text)
    if pieces[0].strip():
        raise ParseError("every row must start with a label")
    for label, body in zip(pieces[1::2], pieces[2::2]):
        row = _parse_row(label, body)
        model.constraints.append(row)
        for name in row.coeffs:
            var(name)

    for line in chunks.get("bounds", []):
        toks = _tokens(line)
        kinds = [k for k, _ in toks]
        if len(toks) == 2 and kinds == ["name", "name"] and toks[1][1].lower() == "free":
            v = var(toks[0][1])
            v.lower, v.upper = None, None
            continue
        ops = [k for k, kind in enumerate(kinds) if kind == "op"]
        nm = [k for k, kind in enumerate(kinds) if kind == "name"]
        if len(nm) != 1:
            raise ParseError(f"bad bound line {line!r}")
        v = var(toks[nm[0]][1])

        def number(seq):
            sign = -1.0 if seq and seq[0] == ("sign", "-") else 1.0
            nums = [val for kind, val in seq if kind == "num"]
            if len(nums) != 1:
                raise ParseError(f"bad bound line {line!r}")
            return sign * _to_number(nums[0])

        if len(ops) == 2:
            lo = number(toks[:ops[0]])
            hi = number(toks[ops[1] + 1:])
            v.lower = None if lo == -math.inf else lo
            v.upper = None if hi == math.inf else hi
        elif len(ops) == 1:
            op = _OPS[toks[ops[0]][1]]
            if nm[0] < ops[0]:
                val = number(toks[ops[0] + 1:])
            else:
                val = number(toks[:ops[0]])
                op = {"<=": ">=", ">=": "<=", "=": "="}[op]
            if op == "<=":
                v.upper = None if val == math.inf else val
            elif op == ">=":
                v.lower = None if val == -math.inf else val
            else:
                v.lower = v.upper = val
        else:
            raise ParseError(f"bad bound line {line!r}")

    for line in chunks.get("binaries", []):
        for name in line.split():
            v = var(name)
            v.kind, v.lower, v.upper = "binary", 0, 1
    for line in chunks.get("generals", []):
        for name in line.split():
            var(name).kind = "integer"

    for line in chunks.get("sos", []):
        m = re.match(r"(" + _NAME + r")\s*:\s*S([12])\s*::\s*(.*)$", line)
        if not m:
            raise ParseError(f"bad SOS line {line!r}")
        members = []
        for item in m.group(3).split():
            name, _, weight = item.partition(":")
            if not weight:
                raise ParseError(f"SOS member without weight: {item!r}")
            var(name)
            members.append((name, float(weight)))
        model.sos.append(SosSet(m.group(1), int(m.group(2)), members))

    model.variables = names
    return model


def read_lp(path) -> LinearModel:
    return parse_lp(Path(path).read_text())


# ---------------------------------------------------------------------------
# solution files ("name value" lines, '#' header comments)
# ---------------------------------------------------------------------------

def format_solution(values: dict[str, Number], objective: Number | None = None,
                    status: str = "optimal", gap: Number | None = None) -> str:
    lines = [f"# Status: {status}"]
    if objective is not None:
        lines.append(f"# Objective value = {_num(objective)}")
    if gap is not None:
        lines.append(f"# Gap = {_num(gap)}")
    lines += [f"{name} {_num(v)}" for name, v in values.items()]
    return "\n".join(lines) + "\n"


@dataclass
class SolutionFile:
    status: str
    objective: float | None
    gap: float | None
    values: dict[str, float]


def parse_solution(text: str) -> SolutionFile:
    status, objective, gap, values = "optimal", None, None, {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, sep, val = body.partition("=") if "=" in body else body.partition(":")
            key = key.strip().lower()
            if not sep:
                continue
            try:
                if key.startswith("status"):
                    status = val.strip().lower()
                elif key.startswith("objective"):
                    objective = float(val)
                elif key.startswith("gap"):
                    gap = float(val)
            except ValueError as exc:
                raise ParseError(f"bad header line {line!r}") from exc
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"bad solution line {line!r}")
        try:
            values[parts[0]] = float(parts[1])
        except ValueError as exc:
            raise ParseError(f"bad value in {line!r}") from exc
    return SolutionFile(status, objective, gap, values)


def iter_names(model: LinearModel, prefix: str) -> Iterable[str]:
    return (name for name in model.variables if name.startswith(prefix))
