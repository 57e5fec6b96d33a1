import os
import random
import sys
from fractions import Fraction

import pytest

from rebpack.model import CkInstance, CkItem, RebpInstance

SOLVER_ENV = "REBPACK_SOLVER"

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def solver_command() -> str:
    return os.environ.get(SOLVER_ENV) or f"{sys.executable} -m rebpack.scipy_solver"


@pytest.fixture
def external_solver():
    return solver_command()


def random_ck(rng: random.Random, n_max: int = 12, vmax: int = 100) -> CkInstance:
    """Integer data bounded by ``vmax``; some items have positive gamma."""
    n = rng.randint(1, n_max)
    items = []
    for _ in range(n):
        beta = rng.randint(1, vmax)
        upper = rng.randint(1, vmax)
        if rng.random() < 0.15:
            gamma = rng.randint(0, vmax)
        else:
            gamma = -rng.randint(0, vmax)
        items.append(CkItem(gamma, beta, upper))
    # keep at least one item with positive full profit
    if all(it.full_profit <= 0 for it in items):
        items[0] = CkItem(-rng.randint(0, 5), rng.randint(1, vmax), rng.randint(6, vmax))
    total = sum(it.upper for it in items)
    capacity = rng.randint(0, min(vmax, int(total)))
    return CkInstance(tuple(items), capacity)


def random_rebp(rng: random.Random, m_max: int = 8, n_max: int = 4,
                equal_rates: bool | None = None) -> RebpInstance:
    m = rng.randint(1, m_max)
    n = rng.randint(1, n_max)
    nominal = [rng.randint(1, 10) for _ in range(m)]
    if rng.random() < 0.5:
        deviation = [Fraction(2, 5) * a for a in nominal]
    else:
        deviation = [rng.randint(0, a) for a in nominal]
    capacity = rng.randint(4, 20)
    if equal_rates is None:
        equal_rates = rng.random() < 0.75
    if equal_rates:
        rates = Fraction(rng.randint(1, 6), rng.randint(1, 3))
    else:
        rates = tuple(Fraction(rng.randint(1, 6), rng.randint(1, 3)) for _ in range(n))
    total = sum(deviation)
    if rng.random() < 0.5:
        budget = Fraction(rng.randint(0, 10), 10) * total
    else:
        budget = min(total, rng.randint(0, 6))
    return RebpInstance(tuple(nominal), tuple(deviation), n, capacity, rates, budget)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
