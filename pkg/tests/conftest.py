import pytest
from hypothesis import HealthCheck, settings

from ripple_sim.topology import ResourceVector, block_grid_positions, build_tree

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def tree16():
    """The 16-BS, 4-mux evaluation tree with (5,8,10) clouds."""
    return build_tree(16, 4, block_grid_positions(4, 4, 2, 2, 200.0), ResourceVector(5, 8, 10))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
