import sys

import pytest
from hypothesis import HealthCheck, settings

from maglap import selftest as st

settings.register_profile(
    "maglap", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("maglap")


@pytest.fixture(scope="session")
def sweep():
    return st.default_sweep()


@pytest.fixture(scope="session")
def band1():
    return st.default_table(1)


@pytest.fixture(scope="session")
def band2():
    return st.default_table(2)


@pytest.fixture(scope="session")
def k_grid(sweep):
    return sweep.k


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
