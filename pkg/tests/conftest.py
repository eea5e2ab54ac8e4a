import itertools

import numpy as np
import pytest


def brute_shell(d, n):
    R = int(np.floor(np.sqrt(n)))
    rng = range(-R, R + 1)
    return [p for p in itertools.product(rng, repeat=d) if sum(x * x for x in p) == n]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE
    except ImportError:
        return
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
