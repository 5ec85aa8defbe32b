import numpy as np
import pytest

GAMMA = 0.5


def real_spectrum_matrix(rng, dim, spread=5.0):
    """``S diag(e) S^-1`` with distinct real ``e`` and a random complex ``S``."""
    e = np.sort(rng.uniform(-spread, spread, dim))
    S = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return S @ np.diag(e) @ np.linalg.inv(S)


def random_hpd(rng, dim, floor=0.5):
    X = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return X @ X.conj().T + floor * np.eye(dim)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def pt2():
    return np.array([[1j * GAMMA, 1], [1, -1j * GAMMA]])


@pytest.fixture
def pt2_theta():
    return np.array([[1, -1j * GAMMA], [1j * GAMMA, 1]])


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
