import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record_acceptance():
    """Store the one-line PASS/FAIL summary of an acceptance criterion."""
    def record(number: int, name: str, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES[number] = f"[{'PASS' if passed else 'FAIL'}] {number}. {name}: {detail}"
        return passed
    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
