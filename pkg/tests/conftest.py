import numpy as np
import pytest

from torusmf.alpha_mt import bandlimited_field
from torusmf.functionals import potential_of_measure
from torusmf.grid import BackgroundForm, GridSpec
from torusmf.measures import from_density


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(64)


@pytest.fixture(scope="session")
def leb64(grid64):
    return BackgroundForm.lebesgue(grid64)


@pytest.fixture(scope="session")
def bench64(grid64):
    """Sign-changing benchmark form rho = 1 + 2 cos(2 pi x)."""
    return BackgroundForm.cosine(grid64, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_measure(grid, rng, amp=None):
    amp = rng.uniform(0.2, 2.0) if amp is None else amp
    return from_density(np.exp(amp * bandlimited_field(grid, rng)))


def random_admissible(omega, rng, amp=None):
    """Potential of a random smooth positive measure (strictly omega-psh)."""
    u = potential_of_measure(random_measure(omega.grid, rng, amp), omega)
    return u + rng.normal()


def cosine_mu0(grid, a=0.5, b=0.3):
    X, Y = grid.coords
    return from_density(1 + a * np.cos(2 * np.pi * X) + b * np.sin(2 * np.pi * Y))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
