import itertools
import sys

import pytest

from ghstein.distributions import GHParams

LAMBDAS = (-1.0, 0.5, 2.0)
ALPHAS = (1.0, 2.0, 5.0)


def parameter_grid():
    """The 27-point grid: lam x alpha x beta in {0, +-alpha/2}, delta = 1."""
    out = []
    for lam, alpha in itertools.product(LAMBDAS, ALPHAS):
        for beta in (0.0, alpha / 2, -alpha / 2):
            out.append(GHParams(lam, alpha, beta, 1.0))
    return out


GRID = parameter_grid()


def grid_id(p):
    return f"lam={p.lam:g},a={p.alpha:g},b={p.beta:g}"


@pytest.fixture
def reference():
    return GHParams(1.0, 2.0, 0.5, 1.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
