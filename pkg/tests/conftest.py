import sys

import numpy as np
import pytest

from stripes import make_params


@pytest.fixture(scope="session")
def p24():
    """d = 2, p = 4 at tau = 0."""
    return make_params(2, 4, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = [mod.RESULTS[k] for k in sorted(mod.RESULTS)] if mod else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
