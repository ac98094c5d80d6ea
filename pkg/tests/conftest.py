import pytest

from dgsignal.evolution import IntegratorConfig
from dgsignal.grid import build_grid
from dgsignal.signaling import Scenario


@pytest.fixture
def coarse_scenario():
    """A small, quick twin-run setup (n = 64) for plumbing tests."""
    return Scenario(grid=build_grid(1, 64, 8.0),
                    integrator=IntegratorConfig(dt=2.5e-4, t_final=0.05, record_stride=2))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
