import math

import numpy as np
import pytest
from hypothesis import strategies as st

from rrrp.generators import random_instance
from rrrp.model import Edge, RendezvousInstance


def one_uav(budget=1.0):
    """One UAV: a detour (c=10, a=0.5) and the null edge (c=0, a=2)."""
    edges = (Edge(0, 0, 10.0, 0.5), Edge(1, 1, 0.0, 2.0))
    return RendezvousInstance(((0, 1),), (0, 1), edges, budget, 1, (1,), {0: (0, 0, 0), 1: None})


@pytest.fixture
def tiny():
    return one_uav()


def small_instances(max_groups=4, max_nodes=4, grid=False):
    """Hypothesis strategy over seeded random instances."""
    return st.builds(
        lambda seed, g, n, d, dens: random_instance(seed, n_groups=g, n_nodes=n, deps_per_group=d,
                                                    density=dens, grid=grid),
        st.integers(0, 2**31 - 1), st.integers(1, max_groups), st.integers(1, max_nodes),
        st.integers(1, 2), st.floats(0.3, 1.0))


def close(a, b, rel=1e-9, abs_=1e-9):
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)


__all__ = ["one_uav", "small_instances", "close", "np", "acceptance_report"]


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_report(request):
    """Collects one status line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
