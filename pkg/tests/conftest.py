import numpy as np
import pytest

from sshprobe import ChainSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def topo_spec():
    return ChainSpec(200, 1.0, 1.5, 0.8)


@pytest.fixture
def trivial_spec():
    return ChainSpec(200, 1.5, 1.0, 1.2)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (len(s.split()[1]), s)):
            terminalreporter.write_line(line)
