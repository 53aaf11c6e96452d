"""Consistency of the manufactured solution with the discrete right-hand sides."""

import numpy as np
import pytest

from slipns.elliptic import PressureSolveParams
from slipns.manufactured import CellularMMS, max_error
from slipns.solver import SolverParams, density_rhs, momentum_rhs
from slipns.spectral import Domain


@pytest.fixture(scope="module")
def case():
    return CellularMMS(Domain.channel_2d(32, 32))


class TestCellularMMS:
    """The exact fields satisfy the forced equations."""

    @pytest.mark.parametrize("t", [0.0, 0.3])
    def test_rhs_matches_time_derivative(self, case, t):
        h = 1e-5
        s = case.exact(t)
        f_rho, f_u = case.forcing(t)
        params = SolverParams(nu=case.nu, pressure=PressureSolveParams(rel_tol=1e-13))
        du = momentum_rhs(s, params=params, force_u=f_u)
        drho = density_rhs(s) + f_rho
        ahead, behind = case.exact(t + h), case.exact(t - h)
        dt_u = [(a - b).values() / (2 * h) for a, b in zip(ahead.u, behind.u)]
        dt_rho = (ahead.rho - behind.rho).values() / (2 * h)
        assert np.max(np.abs(drho.values() - dt_rho)) <= 1e-8
        assert max(np.max(np.abs(a.values() - b)) for a, b in zip(du, dt_u)) <= 1e-8

    def test_exact_state_is_admissible(self, case):
        s = case.exact(0.2)
        assert s.rho.values().min() > 0.85
        assert max_error(s, s) == 0.0
