import numpy as np
import pytest

from faimpolar import model as fm


def kernel_from_chain(A, emit=None):
    """Kernel whose transitions follow ``A`` with uniform input seen noiselessly."""
    A = np.asarray(A, float)
    S = A.shape[0]
    k = np.zeros((S, 2, 2, S))
    for x in range(2):
        k[:, x, x, :] = 0.5 * A
    return k


@pytest.fixture
def ge():
    return fm.gilbert_elliott(0.1, 0.1, 0.01, 0.3)


@pytest.fixture
def bsc011():
    return fm.memoryless_from_channel(fm.bsc(0.11))


@pytest.fixture
def noiseless():
    return fm.memoryless_from_channel(fm.bsc(0.0))


def bec_model(eps):
    return fm.memoryless_from_channel(fm.bec(eps))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
