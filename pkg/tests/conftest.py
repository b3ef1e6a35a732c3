import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def gen():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    def log(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
