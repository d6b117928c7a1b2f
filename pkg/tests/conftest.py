import numpy as np
import pytest

from sarjump import NoiseSpec, SarModel, TransitionMatrix, simulate, veronese_spec

# two-mode first-order model used throughout: a = 0.3 / -0.5, c = 1 / -1
A_TRUE = [[0.3], [-0.5]]
C_TRUE = [[1.0], [-1.0]]
P_EXP1 = [[0.1837, 0.8163], [0.3424, 0.6576]]


@pytest.fixture(scope="session")
def model():
    return SarModel.from_coefficients(A_TRUE, C_TRUE)


@pytest.fixture(scope="session")
def ptm():
    return TransitionMatrix(P_EXP1)


@pytest.fixture(scope="session")
def spec():
    return veronese_spec(2, 1, 1)


@pytest.fixture(scope="session")
def noiseless(model, ptm):
    return simulate(model, ptm, NoiseSpec(0.0), 10_000, seed=7, input_kind="gaussian")


@pytest.fixture(scope="session")
def noisy(model, ptm):
    return simulate(model, ptm, NoiseSpec(0.01), 200_000, seed=11, input_kind="gaussian")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[num])
