import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gmsurf import solve
from gmsurf.harness.config import nondimensionalize
from gmsurf.harness.studies import benchmark_arc, benchmark_segment, curvature_case

settings.register_profile("default", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def solve_config(cfg):
    inp = nondimensionalize(cfg)
    return inp, solve(inp.curve, inp.bulk, inp.surface, inp.load, inp.quad)


@pytest.fixture(scope="session")
def arc50():
    return solve_config(benchmark_arc(50))


@pytest.fixture(scope="session")
def arc20():
    return solve_config(benchmark_arc(20))


@pytest.fixture(scope="session")
def segment50():
    return solve_config(benchmark_segment(50))


@pytest.fixture(scope="session")
def flat_segment20():
    """Horizontal segment under remote tension normal to it."""
    return solve_config(curvature_case("i", 20))


@pytest.fixture(scope="session")
def ellipse20():
    return solve_config(curvature_case("iv", 20))


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
