import sys
from fractions import Fraction

import pytest

from gradheat import grid as G
from gradheat.estimates import decreasing_profile
from gradheat.params import ProblemParams, smallness_threshold

SUBCRITICAL = ProblemParams(1, 3, Fraction(6, 5), 1.0)


def subcritical_run(R=2.0, h=0.01, T=0.5, stride=50):
    """Hypothesis-satisfying subcritical run: cap below the smallness threshold, frozen boundary."""
    grid = G.Grid(1, R, h)
    u0 = decreasing_profile(grid, 0.9 * smallness_threshold(SUBCRITICAL))
    cfg = G.SolverConfig(dt=G.stable_dt(grid), T=T, bc=G.BC.DIRICHLET_FROZEN, stride=stride,
                         stop_at_steady=False)
    return G.solve(G.Field(grid, u0), SUBCRITICAL, cfg)


@pytest.fixture(scope="session")
def sub_traj():
    return subcritical_run()


@pytest.fixture(scope="session")
def sub_traj_2R():
    return subcritical_run(R=4.0)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for mod in list(sys.modules.values()):
        lines.extend(getattr(mod, "ACCEPTANCE_RESULTS", []) or [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(lines), key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
