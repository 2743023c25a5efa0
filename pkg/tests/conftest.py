import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, max_examples=60)
settings.load_profile("ci")

# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def enumerate_signed_sums(steps):
    """Independent oracle: all 2**n sign assignments, exact integer counts.

    Returns (values, counts) with probability counts / 2**n.
    """
    sums = np.zeros(1, dtype=np.int64)
    for a in steps:
        sums = np.concatenate([sums - a, sums + a])
    return np.unique(sums, return_counts=True)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0xA5A5)
