import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_orthonormal(rng, m, n):
    Q, R = np.linalg.qr(rng.standard_normal((m, n)))
    return Q * np.sign(np.diag(R))


def decaying_matrix(m, n, seed=0):
    """m x n matrix with singular values 2^-1, 2^-2, ..., 2^-n."""
    rng = np.random.default_rng(seed)
    U = random_orthonormal(rng, m, n)
    V = random_orthonormal(rng, n, n)
    s = 2.0 ** -np.arange(1, n + 1)
    return (U * s) @ V.T
