import itertools

import numpy as np
import pytest


def set_match_error(found, targets):
    """Smallest worst-case distance over one-to-one pairings of found to targets.

    Returns ``inf`` when fewer values were found than targets.
    """
    found = list(found)
    if len(found) < len(targets):
        return float("inf")
    best = float("inf")
    for perm in itertools.permutations(found, len(targets)):
        best = min(best, max(abs(a - b) for a, b in zip(perm, targets)))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# filled by tests/test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
