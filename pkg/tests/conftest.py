import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rfm_ace import PhantomSpec, ScanConfig, simulate_frame

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def config():
    return ScanConfig()


@pytest.fixture(scope="session")
def small_config():
    """Eight short lines: fast enough for per-test synthesis."""
    return ScanConfig(num_lines=8, samples_per_line=2048)


@pytest.fixture(scope="session")
def default_frame(config):
    return simulate_frame(PhantomSpec(seed=3), config)


@pytest.fixture(scope="session")
def small_frame(small_config):
    spec = PhantomSpec(depth_range=(0.003, 0.03), seed=11)
    return simulate_frame(spec, small_config)


def rel_err(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)) / np.abs(np.asarray(b))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
