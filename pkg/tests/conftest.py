import sys

import numpy as np
import pytest

from rbas.system import LinearSystem


def random_system(rng, n, d, rank=None, consistent=True):
    rank = min(n, d) if rank is None else rank
    A = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, d))
    b = A @ rng.standard_normal(d)
    if not consistent:
        b = b + rng.standard_normal(n)
    return LinearSystem(A, b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
