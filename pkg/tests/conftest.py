import numpy as np
import pytest

from tirever.distributions import SkewedTParams, stream
from tirever.mar import MarSpec, mar_simulate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def simulate(phi, varphi, n, seed, nu=3.0, gamma=1.0):
    spec = MarSpec(phi, varphi, SkewedTParams(nu, gamma))
    return mar_simulate(spec, n, stream(seed))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
