"""Shared fixtures and problem generators for the test suite."""

import numpy as np
import pytest

from alphari import DecisionProblem, build_problem, solve

#: One line per acceptance criterion, filled in by test_acceptance and
#: echoed after the run so the verdicts are visible even when stdout
#: capture is on.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_tracking(n=2, h=1.0, l=0.0, kappa=1.0, alpha=1.0):
    """Square state-matching problem: payoff h on the diagonal, l off it."""
    u = np.full((n, n), float(l))
    np.fill_diagonal(u, float(h))
    mu = np.full(n, 1.0 / n)
    return build_problem(u, mu, kappa, alpha)


def random_problem(i, alpha=None, base=3000, lo=2, hi=7):
    """Deterministic random instance; draw order is part of the contract."""
    r = np.random.default_rng(base + i)
    n = int(r.integers(lo, hi))
    m = int(r.integers(lo, hi))
    u = r.uniform(0.0, 2.0, (n, m))
    mu = r.dirichlet(np.ones(n))
    kap = float(r.uniform(0.2, 1.5))
    if alpha is None:
        alpha = (0.5, 1.0, 2.0)[i % 3]
    return build_problem(u, mu, kap, alpha)


@pytest.fixture(scope="session")
def corpus():
    """200 solved random instances shared across modules.

    Sizes 2..6 in both axes, alpha cycling through 0.5 / 1 / 2.  Solving
    once per session keeps the suite fast; tests must not mutate entries.
    """
    pairs = []
    for i in range(200):
        p = random_problem(i)
        pairs.append((p, solve(p)))
    return pairs


@pytest.fixture()
def tracking_2x2():
    return make_tracking(n=2, h=1.0, l=0.0, kappa=1.0, alpha=1.0)


ASYM_2X2 = dict(
    payoff=[[1.3, 0.1], [0.0, 0.9]],
    prior=[0.55, 0.45],
    kappa=0.8,
    alpha=2.0,
    states=["g", "b"],
    actions=["buy", "wait"],
)


def asym_2x2() -> DecisionProblem:
    """Asymmetric binary instance that needs well over a hundred sweeps."""
    return build_problem(
        np.array(ASYM_2X2["payoff"]),
        np.array(ASYM_2X2["prior"]),
        ASYM_2X2["kappa"],
        ASYM_2X2["alpha"],
        states=ASYM_2X2["states"],
        actions=ASYM_2X2["actions"],
    )
