import numpy as np
import pytest
from scipy import stats

from stochauction.bids import validate_profile
from stochauction.dist import TabulatedDistribution, WeibullDistribution


@pytest.fixture(scope="session")
def weibull():
    return WeibullDistribution(2.0, 1509.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def make_tables():
    """Three tabulated laws with different shapes, one with an exponential tail."""
    out = []
    for law, top in [
        (stats.gamma(3.0, scale=400.0), 4000.0),
        (stats.lognorm(0.5, scale=1200.0), 5000.0),
        (stats.weibull_min(2.5, scale=1800.0), 3000.0),
    ]:
        grid = np.linspace(0.0, top, 400)
        out.append(TabulatedDistribution(grid, law.cdf(grid)))
    return out


@pytest.fixture(scope="session")
def tables():
    return make_tables()


@pytest.fixture
def two_lse():
    # geometric profile N=2, eta=0.5, c1=10, pi1=12
    return validate_profile([(10.0, 12.0), (15.0, 24.0)])


@pytest.fixture
def one_lse():
    return validate_profile([(10.0, 12.0)])


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
