import sys

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, k, spread=1.0):
    a = rng.standard_normal((k, k))
    q, _ = np.linalg.qr(a)
    lam = np.exp(spread * rng.standard_normal(k))
    return (q * lam) @ q.T


def random_sym(rng, k, scale=1.0):
    a = scale * rng.standard_normal((k, k))
    return 0.5 * (a + a.T)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
