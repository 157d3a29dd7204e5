import numpy as np
import pytest

from semifront.fbp import InitialData, solve as fbp_solve
from semifront.nonlinearity import kpp_logistic
from semifront.semiwave import solve_semiwave


@pytest.fixture(scope="session")
def logistic_pair():
    """Coarse autonomous logistic pair, shared by unit tests."""
    return solve_semiwave(kpp_logistic(eps=0.0), 0.5, 1.0, L=20.0, Nt=64, Nx=400)


@pytest.fixture(scope="session")
def periodic_pair():
    """Coarse seasonally modulated pair (eps = 0.3)."""
    return solve_semiwave(kpp_logistic(eps=0.3), 0.5, 1.0, L=20.0, Nt=128, Nx=400)


@pytest.fixture(scope="session")
def short_run():
    """Symmetric 10-period run on modest grids, paired with periodic_pair."""
    nl = kpp_logistic(eps=0.3)
    return fbp_solve(InitialData(h0=2.0, shape="bump", amplitude=0.4),
                     nl, 1.0, 0.5, horizon=10.0, Ny=400, dt=nl.T / 1000)
