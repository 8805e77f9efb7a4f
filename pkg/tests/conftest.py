from __future__ import annotations

import pytest

from fastplap.params import ProblemParams
from fastplap.solver import SolverConfig, mdp_spec, run_mdp


def mdp_run(p: float, n: int = 3, R: float = 1.0, mass: float = 1.0, N: int = 800, **cfg):
    spec = mdp_spec(ProblemParams(p, n), R, 3 * R, "bump", mass)
    return run_mdp(spec, SolverConfig(grid_points=N, **cfg))


@pytest.fixture(scope="session")
def mdp16():
    """n=3, p=1.6 (good range), unit bump on B_1 inside B_3, 800 nodes."""
    return mdp_run(1.6)


@pytest.fixture(scope="session")
def mdp13():
    """n=3, p=1.3 (below p_c), unit bump on B_1 inside B_3, 800 nodes."""
    return mdp_run(1.3)


@pytest.fixture(scope="session")
def mdp16_coarse():
    return mdp_run(1.6, N=400)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
