"""Exception hierarchy.

Every error carries a ``category`` (the class name) so the CLI can report a
machine-readable failure kind.
"""


class RebpackError(Exception):
    """Base class for all package errors."""

    @property
    def category(self) -> str:
        return type(self).__name__


# -- instance / model ------------------------------------------------------

class InstanceError(RebpackError, ValueError):
    pass


class NegativeDuration(InstanceError):
    pass


class BudgetOutOfRange(InstanceError):
    pass


class EmptyInstance(InstanceError):
    pass


class BadInstance(InstanceError):
    """Structural problem not covered by a more specific class."""


class UnassignedItem(RebpackError, ValueError):
    pass


class ScenarioInfeasible(RebpackError, ValueError):
    pass


# -- knapsack --------------------------------------------------------------

class ScalingNotExact(RebpackError, ValueError):
    pass


class EpsilonOutOfRange(RebpackError, ValueError):
    pass


class TooLarge(RebpackError, ValueError):
    pass


class ProfitBoundOverflow(RebpackError, MemoryError):
    pass


# -- separation ------------------------------------------------------------

class FractionalInput(RebpackError, ValueError):
    pass


class NonIntegerBudget(RebpackError, ValueError):
    pass


class BadBox(RebpackError, ValueError):
    pass


# -- master ----------------------------------------------------------------

class CutsRequireEqualCosts(RebpackError, ValueError):
    pass


class TooLargeForInternal(RebpackError, ValueError):
    pass


class MasterInfeasible(RebpackError, RuntimeError):
    pass


class DuplicateScenario(RebpackError, ValueError):
    pass


class SolverNotFound(RebpackError, FileNotFoundError):
    pass


class SolverReportedInfeasible(RebpackError, RuntimeError):
    pass


class SolverFailed(RebpackError, RuntimeError):
    pass


# -- files / generators ----------------------------------------------------

class ParseError(RebpackError, ValueError):
    pass


class VersionMismatch(ParseError):
    pass


class BadSpec(RebpackError, ValueError):
    pass
