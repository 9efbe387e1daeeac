import numpy as np
import pytest

from duloc.array import ArrayGeometry, DoaGrid, steering_vector


def random_hermitian(rng, n, psd=False):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    if psd:
        return x @ x.conj().T
    return x + x.conj().T


def exact_psd(geometry, bin, theta, power=1.0, sigma2=0.0, L=2048, fs=44100.0):
    """Model PSD ``P a a^H + sigma2 I`` for a single far-field source."""
    a = steering_vector(geometry, bin, L, fs, theta)
    return power * np.outer(a, a.conj()) + sigma2 * np.eye(a.size)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ula8():
    return ArrayGeometry.ula(8, 0.07)


@pytest.fixture
def grid1():
    return DoaGrid.uniform(1.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
