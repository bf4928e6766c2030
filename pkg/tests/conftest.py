import os

import pytest
from hypothesis import HealthCheck, settings

from kmm_portfolio.ambiguity import DiscreteSOD, GaussianSOD
from kmm_portfolio.closed_form import solve_cara, solve_crra, solve_hara
from kmm_portfolio.market import MarketParams

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BETA = 1.0 / 3.0
GAMMA = -0.5


@pytest.fixture
def mp():
    return MarketParams()


@pytest.fixture
def sod(mp):
    return GaussianSOD.from_sigma0(mp, 2.0)


@pytest.fixture
def two_priors():
    return DiscreteSOD((0.15, 0.09), (2.0 / 3.0, 1.0 / 3.0))


@pytest.fixture
def crra(mp, sod):
    return solve_crra(mp, sod, GAMMA, BETA)


@pytest.fixture
def cara(mp, sod):
    return solve_cara(mp, sod, GAMMA, 1.0)


@pytest.fixture
def hara(mp, sod):
    return solve_hara(mp, sod, GAMMA, BETA, 1.0)


# acceptance criteria report one line each; collected here and echoed in the summary
_CRITERIA = []


@pytest.fixture
def criterion():
    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
