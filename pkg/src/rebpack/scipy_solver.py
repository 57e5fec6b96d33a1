"""Small MILP command-line solver backed by ``scipy.optimize.milp`` (HiGHS).

Usage::

    python -m rebpack.scipy_solver MODEL.lp OPTIONS SOLUTION

It reads the LP files written by :mod:`rebpack.lpfile`, honours the ``gap``
and ``time_limit`` options and writes a ``name value`` solution file. SOS2
sets are modelled with one binary per adjacent breakpoint pair. Hints are
accepted and ignored since HiGHS through scipy takes no start vector.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from rebpack.lpfile import format_solution, read_lp
from rebpack.master import parse_options


def solve_lp_file(model_path, options: dict | None = None):
    model = read_lp(model_path)
    options = options or {}
    names = list(model.variables)
    extra = []  # segment binaries for SOS2 sets
    for s in model.sos:
        if s.kind != 2:
            raise ValueError(f"SOS{s.kind} sets are not supported")
        extra += [f"__seg_{s.name}_{k}" for k in range(max(len(s.members) - 1, 1))]
    allnames = names + extra
    col = {v: k for k, v in enumerate(allnames)}
    nv = len(allnames)
    if nv == 0:
        return "optimal", 0.0, 0.0, {}

    c = np.zeros(nv)
    sign = 1.0 if model.sense == "min" else -1.0
    for v, coef in model.objective.items():
        c[col[v]] = sign * float(coef)

    lo = np.zeros(nv)
    hi = np.full(nv, np.inf)
    integrality = np.zeros(nv)
    for v in names:
        var = model.variables[v]
        lo[col[v]] = -np.inf if var.lower is None else float(var.lower)
        hi[col[v]] = np.inf if var.upper is None else float(var.upper)
        if var.kind in ("binary", "integer"):
            integrality[col[v]] = 1
    for v in extra:
        lo[col[v]], hi[col[v]], integrality[col[v]] = 0, 1, 1

    rows, rlo, rhi = [], [], []
    for r in model.constraints:
        a = np.zeros(nv)
        for v, coef in r.coeffs.items():
            a[col[v]] += float(coef)
        rhs = float(r.rhs)
        rows.append(a)
        rlo.append(rhs if r.sense in (">=", "=") else -np.inf)
        rhi.append(rhs if r.sense in ("<=", "=") else np.inf)
    for s in model.sos:
        segs = [col[f"__seg_{s.name}_{k}"] for k in range(max(len(s.members) - 1, 1))]
        a = np.zeros(nv)
        a[segs] = 1
        rows.append(a)
        rlo.append(-np.inf)
        rhi.append(1)
        # member k may be nonzero only if segment k-1 or k is chosen
        for k, (v, _) in enumerate(s.members):
            ub = hi[col[v]]
            big = 1.0 if not np.isfinite(ub) else max(ub, 1.0)
            a = np.zeros(nv)
            a[col[v]] = 1
            for t in (k - 1, k):
                if 0 <= t < len(segs):
                    a[segs[t]] -= big
            rows.append(a)
            rlo.append(-np.inf)
            rhi.append(0)

    milp_options = {"disp": False}
    if "gap" in options:
        milp_options["mip_rel_gap"] = float(options["gap"])
    if "time_limit" in options:
        milp_options["time_limit"] = float(options["time_limit"])
    constraints = [LinearConstraint(np.array(rows), rlo, rhi)] if rows else []
    res = milp(c, constraints=constraints, integrality=integrality,
               bounds=Bounds(lo, hi), options=milp_options)
    if res.x is None:
        status = "infeasible" if res.status == 2 else f"failed ({res.message})"
        return status, None, None, {}
    values = {v: float(res.x[col[v]]) for v in names}
    gap = getattr(res, "mip_gap", None)
    return "optimal" if res.status == 0 else "feasible", sign * float(res.fun), gap, values


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="rebpack.scipy_solver")
    ap.add_argument("model")
    ap.add_argument("options")
    ap.add_argument("solution")
    args = ap.parse_args(argv)
    with open(args.options) as fh:
        options = parse_options(fh.read())
    status, objective, gap, values = solve_lp_file(args.model, options)
    with open(args.solution, "w") as fh:
        fh.write(format_solution(values, objective, status, gap))
    return 0 if status in ("optimal", "feasible", "infeasible") else 1


if __name__ == "__main__":
    sys.exit(main())
