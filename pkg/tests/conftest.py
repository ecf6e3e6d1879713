import acceptance_report
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lydroo.config import default_config

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")



def pytest_terminal_summary(terminalreporter):
    if acceptance_report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_report.LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def cfg10():
    return default_config(10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
