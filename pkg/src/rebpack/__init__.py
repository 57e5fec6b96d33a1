"""Robust extensible bin packing under budgeted uncertainty.

Row-and-column generation with an exact dynamic program (and an FPTAS) for
the two-piece convex knapsack that arises as the worst-case separation step.
"""

from rebpack.knapsack import brute_force_ck, export_sos2, solve_dp, solve_fptas
from rebpack.master import (
    MasterModel,
    MasterSolution,
    ScenarioPool,
    add_scenario,
    build_master,
    solve_master_external,
    solve_master_internal,
)
from rebpack.model import (
    CkInstance,
    CkItem,
    CkSolution,
    RebpInstance,
    Scenario,
    rebp_objective,
)
from rebpack.oracles import enumerate_uomega_vertices, robust_brute_force, subset_sum
from rebpack.rcg import RcgConfig, RcgResult, RcgTrace, solve_rebp
from rebpack.separation import SeparationResult, separate

__version__ = "0.1.0"

__all__ = [
    "CkInstance", "CkItem", "CkSolution", "RebpInstance", "Scenario", "rebp_objective",
    "solve_dp", "solve_fptas", "brute_force_ck", "export_sos2",
    "SeparationResult", "separate",
    "MasterModel", "MasterSolution", "ScenarioPool", "build_master", "add_scenario",
    "solve_master_internal", "solve_master_external",
    "RcgConfig", "RcgResult", "RcgTrace", "solve_rebp",
    "enumerate_uomega_vertices", "robust_brute_force", "subset_sum",
]
