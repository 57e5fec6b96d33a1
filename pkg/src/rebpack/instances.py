"""Benchmark generators and plain-text instance files.

File formats (one record per line, ``#`` starts a comment, numbers are
integers or ``p/q`` rationals)::

    format rebp v1          format ck v1            format schedule v1
    name demo               name demo               bins 0 0 1
    bins 2                  capacity 12             theta 3
    capacity 6              item -2950 50 60
    budget 1                item ...
    rates 1 1
    item 4 1                (item: gamma beta upper)
    item ...                (item: nominal deviation)
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from rebpack.errors import BadSpec, ParseError, VersionMismatch
from rebpack.model import CkInstance, CkItem, RebpInstance, as_rational

FORMAT_VERSION = "v1"
CK_RANGES = (10**2, 10**3, 10**4)
EXPERIMENTS = range(1, 31)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CkGenSpec:
    n: int
    R: int = 100
    experiment: int = 1
    seed: int = 0

    @property
    def k(self) -> int:
        return 5 + 3 * self.experiment


def budget_ratio(experiment: int) -> Fraction:
    return Fraction(5 + 3 * experiment, 101)


def gen_ck(spec: CkGenSpec) -> CkInstance:
    """Random two-piece knapsack whose breakpoint sits one unit below the
    upper bound, so each item's full profit is its drawn value ``p``."""
    if spec.n < 1:
        raise BadSpec(f"n must be positive, got {spec.n}")
    if spec.R < 2:
        raise BadSpec(f"R must be at least 2, got {spec.R}")
    if spec.experiment not in EXPERIMENTS:
        raise BadSpec(f"experiment index must lie in 1..30, got {spec.experiment}")
    rng = random.Random(spec.seed)
    items = []
    for _ in range(spec.n):
        p = rng.randint(1, spec.R - 1)
        u = math.ceil(p + Fraction(spec.R, 10))
        kink = u - 1
        items.append(CkItem(Fraction(-kink * p), Fraction(p), Fraction(u)))
    omega = budget_ratio(spec.experiment) * sum(it.upper for it in items)
    return CkInstance(tuple(items), omega,
                      name=f"ck-R{spec.R}-n{spec.n}-i{spec.experiment}-s{spec.seed}")


@dataclass(frozen=True)
class RebpGenSpec:
    nominal: tuple | None = None
    m: int | None = None  # item count when ``nominal`` is drawn
    a_max: int = 20
    bins: int | None = None  # defaults to the item count
    deviation_ratio: Fraction = Fraction(2, 5)
    capacity_divisor: Fraction = Fraction(8)
    budget_ratio: Fraction = Fraction(1, 10)
    cost_factor: Fraction = Fraction(3, 2)
    seed: int = 0
    name: str = ""


def gen_rebp(spec: RebpGenSpec) -> RebpInstance:
    """Benchmark instance from nominal durations; missing durations are drawn
    uniformly from ``1..a_max``."""
    if spec.nominal is not None:
        nominal = [as_rational(v) for v in spec.nominal]
    elif spec.m:
        if spec.a_max < 1:
            raise BadSpec(f"a_max must be positive, got {spec.a_max}")
        rng = random.Random(spec.seed)
        nominal = [Fraction(rng.randint(1, spec.a_max)) for _ in range(spec.m)]
    else:
        nominal = []
    if not nominal:
        raise BadSpec("no nominal durations given")
    if any(v <= 0 for v in nominal):
        raise BadSpec("nominal durations must be positive")
    ratio = as_rational(spec.deviation_ratio)
    deviation = [ratio * v for v in nominal]
    capacity = (sum(nominal) + sum(deviation)) / as_rational(spec.capacity_divisor)
    budget = as_rational(spec.budget_ratio) * sum(deviation)
    rate = as_rational(spec.cost_factor) / capacity
    bins = spec.bins if spec.bins is not None else len(nominal)
    if bins < 1:
        raise BadSpec(f"bin count must be positive, got {bins}")
    name = spec.name or f"rebp-m{len(nominal)}-s{spec.seed}"
    return RebpInstance(tuple(nominal), tuple(deviation), bins, capacity, rate, budget, name)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def _q(v) -> str:
    v = as_rational(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _num(tok: str, line: int) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"line {line}: bad number {tok!r}") from exc


def format_instance(inst) -> str:
    if isinstance(inst, RebpInstance):
        lines = [f"format rebp {FORMAT_VERSION}"]
        if inst.name:
            lines.append(f"name {inst.name}")
        lines += [f"bins {inst.bin_count}", f"capacity {_q(inst.capacity)}",
                  f"budget {_q(inst.budget)}", "rates " + " ".join(_q(c) for c in inst.rates)]
        lines += [f"item {_q(a)} {_q(d)}" for a, d in zip(inst.nominal, inst.deviation)]
    elif isinstance(inst, CkInstance):
        lines = [f"format ck {FORMAT_VERSION}"]
        if inst.name:
            lines.append(f"name {inst.name}")
        lines.append(f"capacity {_q(inst.capacity)}")
        lines += [f"item {_q(it.gamma)} {_q(it.beta)} {_q(it.upper)}" for it in inst.items]
    else:
        raise TypeError(f"cannot write {type(inst).__name__}")
    return "\n".join(lines) + "\n"


def write_instance(inst, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_instance(inst))
    return path


def _records(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            key, *rest = line.split()
            yield no, key, rest


def _header(records, kind: str | None = None) -> str:
    try:
        no, key, rest = next(records)
    except StopIteration:
        raise ParseError("empty instance file") from None
    if key != "format" or len(rest) != 2:
        raise ParseError(f"line {no}: expected 'format <kind> {FORMAT_VERSION}' header")
    found, version = rest
    if found not in ("rebp", "ck", "schedule") or (kind is not None and found != kind):
        raise ParseError(f"line {no}: unexpected file kind {found!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"file version {version}, reader expects {FORMAT_VERSION}")
    return found


def parse_instance(text: str):
    records = _records(text)
    kind = _header(records)
    if kind == "schedule":
        raise ParseError("schedule file given where an instance was expected")
    fields: dict = {"name": ""}
    items = []
    allowed = {"rebp": ("name", "bins", "capacity", "budget", "rates", "item"),
               "ck": ("name", "capacity", "item")}[kind]
    width = 2 if kind == "rebp" else 3
    for no, key, rest in records:
        if key not in allowed:
            raise ParseError(f"line {no}: unknown key {key!r}")
        if key == "item":
            if len(rest) != width:
                raise ParseError(f"line {no}: item needs {width} numbers")
            items.append(tuple(_num(t, no) for t in rest))
        elif key == "name":
            fields["name"] = " ".join(rest)
        elif key in fields:
            raise ParseError(f"line {no}: duplicate key {key!r}")
        elif key == "bins":
            if len(rest) != 1 or not rest[0].isdigit():
                raise ParseError(f"line {no}: bins needs one integer")
            fields["bins"] = int(rest[0])
        elif key == "rates":
            if not rest:
                raise ParseError(f"line {no}: rates needs values")
            fields["rates"] = tuple(_num(t, no) for t in rest)
        else:
            if len(rest) != 1:
                raise ParseError(f"line {no}: {key} needs one value")
            fields[key] = _num(rest[0], no)
    need = ("bins", "capacity", "budget", "rates") if kind == "rebp" else ("capacity",)
    missing = [k for k in need if k not in fields]
    if missing:
        raise ParseError(f"missing keys: {', '.join(missing)}")
    if kind == "ck":
        return CkInstance(tuple(CkItem(*it) for it in items), fields["capacity"], fields["name"])
    rates = fields["rates"]
    if len(rates) == 1:
        rates = rates[0]
    return RebpInstance(tuple(a for a, _ in items), tuple(d for _, d in items), fields["bins"],
                        fields["capacity"], rates, fields["budget"], fields["name"])


def read_instance(path):
    return parse_instance(Path(path).read_text())


@dataclass(frozen=True)
class ScheduleFile:
    bins: tuple[int, ...]
    theta: Fraction | None = None


def format_schedule(bins: Sequence[int], theta=None) -> str:
    lines = [f"format schedule {FORMAT_VERSION}", "bins " + " ".join(str(b) for b in bins)]
    if theta is not None:
        lines.append(f"theta {_q(theta)}")
    return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> ScheduleFile:
    records = _records(text)
    _header(records, "schedule")
    bins, theta = None, None
    for no, key, rest in records:
        if key == "bins":
            if not all(t.isdigit() for t in rest):
                raise ParseError(f"line {no}: bins must be nonnegative integers")
            bins = tuple(int(t) for t in rest)
        elif key == "theta" and len(rest) == 1:
            theta = _num(rest[0], no)
        else:
            raise ParseError(f"line {no}: unknown key {key!r}")
    if bins is None:
        raise ParseError("schedule file lacks a bins line")
    return ScheduleFile(bins, theta)


def read_schedule(path) -> ScheduleFile:
    return parse_schedule(Path(path).read_text())


def instance_path(root, kind: str, name: str) -> Path:
    """Location of a generated file under the versioned directory layout."""
    return Path(root) / FORMAT_VERSION / kind / f"{name}.{kind}"


__all__ = ["CkGenSpec", "RebpGenSpec", "gen_ck", "gen_rebp", "budget_ratio", "CK_RANGES",
           "EXPERIMENTS", "format_instance", "parse_instance", "read_instance",
           "write_instance", "ScheduleFile", "format_schedule", "parse_schedule",
           "read_schedule", "instance_path", "FORMAT_VERSION"]
