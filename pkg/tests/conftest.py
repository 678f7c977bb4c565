import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tatarc.config import RunConfig
from tatarc.forward import simulate_boundary_data

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by tests/test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def run_cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def default_sino(run_cfg):
    """Full-size boundary data for the default phantom (about half a minute)."""
    return simulate_boundary_data(run_cfg.phantom(), run_cfg.time_grid(), run_cfg.angular_grid())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
