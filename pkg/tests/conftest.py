import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


def spd(rng, p, jitter=0.5):
    a = rng.standard_normal((p, p))
    return a @ a.T / p + jitter * np.eye(p)


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


_CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_CRITERIA] = []


@pytest.fixture
def record_criterion(request):
    """Log one PASS/FAIL line for an acceptance criterion and return the flag."""
    lines = request.config.stash[_CRITERIA]

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
