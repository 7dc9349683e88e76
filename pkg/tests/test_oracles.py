import math

import numpy as np
import pytest

from branchpde.errors import NewtonDiverged
from branchpde.kernels import Interval, exit_time_cdf
from branchpde.oracles import (
    closed_phi,
    euler_exit_mc,
    pde_nonlinearity,
    rect_laplace_quadrature,
    solve_bvp_1d,
)
from branchpde.rect import cube

SQRT2 = math.sqrt(2.0)


def cosh_ode(x, u):
    # (1/2) u'' + (1/2) u^3 + (1/2) u - u = 0
    return 0.5 * u ** 3 + 0.5 * u - u


def tan_sq_ode(x, u):
    # (1/2) u'' + 1/2 - (3/2) u^2 - u = 0
    return 0.5 - 1.5 * u ** 2 - u


class TestBvpSolver:
    def test_cosh_solution(self):
        r = 0.3
        sol = solve_bvp_1d(cosh_ode, SQRT2 / math.cosh(-r), SQRT2 / math.cosh(r), r, 4001)
        assert abs(sol.at(0.0) - SQRT2) < 1e-8
        assert sol.residual < 1e-9

    def test_tan_sq_solution(self):
        r = 0.14
        sol = solve_bvp_1d(
            tan_sq_ode, 1 + 2 * math.tan(-r) ** 2, 1 + 2 * math.tan(r) ** 2, r, 4001
        )
        assert abs(sol.at(0.0) - 1.0) < 1e-8
        assert sol.residual < 1e-9

    def test_harmonic_constant(self):
        # zero nonlinearity, equal endpoints: u is constant
        sol = solve_bvp_1d(lambda x, u: 0.0 * u, 3.25, 3.25, 1.0, 501)
        np.testing.assert_allclose(sol.values, 3.25, atol=1e-12)

    def test_self_convergence(self):
        r = 0.3
        args = (cosh_ode, SQRT2 / math.cosh(-r), SQRT2 / math.cosh(r), r)
        u1 = solve_bvp_1d(*args, 4001).at(0.0)
        u2 = solve_bvp_1d(*args, 8001).at(0.0)
        assert abs(u2 - u1) < 1e-8

    def test_divergence_reported(self):
        with pytest.raises(NewtonDiverged):
            solve_bvp_1d(lambda x, u: np.exp(u ** 2) * 1e6, 5.0, 5.0, 1.0, 101)

    def test_from_problem_spec(self, ex1_spec):
        f = pde_nonlinearity(ex1_spec)
        sol = solve_bvp_1d(f, SQRT2 / math.cosh(-0.3), SQRT2 / math.cosh(0.3), 0.3, 2001)
        assert abs(sol.at(0.0) - SQRT2) < 1e-7


class TestClosedPhi:
    def test_boundary_match(self):
        phi, _ = closed_phi(0.7, 2.0, 0.7, h_lo=1.5, h_hi=-2.5)
        assert phi == pytest.approx(-2.5, abs=1e-12)
        phi, _ = closed_phi(-0.7, 2.0, 0.7, h_lo=1.5, h_hi=-2.5)
        assert phi == pytest.approx(1.5, abs=1e-12)

    def test_constant_boundary_reproduces_laplace(self):
        phi, _ = closed_phi(0.0, 1.0, 1.0, 1.0, 1.0)
        assert phi == pytest.approx(1.0 / math.cosh(math.sqrt(2.0)), abs=1e-14)

    def test_even_data_flat_at_center(self):
        _, dphi = closed_phi(0.0, 3.0, 0.5, 2.0, 2.0)
        assert abs(dphi) < 1e-13

    def test_ode_identity(self):
        # (1/2) phi'' - beta phi = 0: phi'' = 2 beta phi analytically, checked
        # by a 4th-order finite difference of the returned phi
        beta, r = 1.7, 0.8
        rng = np.random.default_rng(2)
        for x in rng.uniform(-0.6, 0.6, 8):
            h = 1e-4
            xs = x + h * np.array([-2, -1, 0, 1, 2])
            phis = np.array([closed_phi(xx, beta, r, 0.9, 1.4)[0] for xx in xs])
            d2 = (-phis[0] + 16 * phis[1] - 30 * phis[2] + 16 * phis[3] - phis[4]) / (12 * h * h)
            assert d2 == pytest.approx(2.0 * beta * phis[2], rel=1e-7)

    def test_derivative_consistent(self):
        beta, r = 2.0, 0.6
        h = 1e-6
        for x in (-0.3, 0.1, 0.45):
            p_hi, d = closed_phi(x + h, beta, r, 1.0, 3.0)
            p_lo, _ = closed_phi(x - h, beta, r, 1.0, 3.0)
            _, dphi = closed_phi(x, beta, r, 1.0, 3.0)
            assert dphi == pytest.approx((p_hi - p_lo) / (2 * h), rel=1e-8)


class TestEulerExitMc:
    def test_agreement_with_series_cdf(self):
        iv = Interval(-1.0, 1.0)
        rng = np.random.default_rng(3)
        law = euler_exit_mc(0.0, iv, dt=1e-4, n=30_000, rng=rng)
        ts = np.linspace(0.05, 3.0, 30)
        emp = law.cdf(ts)
        exact = exit_time_cdf(ts, 0.0, iv)
        # DKW band plus slack for the O(sqrt(dt)) late-exit bias
        assert np.abs(emp - exact).max() < law.dkw_epsilon(0.001) + 6 * math.sqrt(1e-4)

    def test_side_split(self):
        iv = Interval(0.0, 1.0)
        rng = np.random.default_rng(4)
        law = euler_exit_mc(0.5, iv, dt=1e-4, n=20_000, rng=rng)
        p = law.hi_side.mean()
        assert abs(p - 0.5) < 3 * 0.5 / math.sqrt(law.n)

    def test_brownian_scaling(self):
        rng = np.random.default_rng(5)
        wide = euler_exit_mc(0.0, Interval(-2.0, 2.0), dt=4e-4, n=20_000, rng=rng)
        narrow = euler_exit_mc(0.0, Interval(-1.0, 1.0), dt=1e-4, n=20_000, rng=rng)
        ts = np.linspace(0.1, 2.0, 12)
        band = wide.dkw_epsilon(0.001) + narrow.dkw_epsilon(0.001) + 6 * math.sqrt(1e-4)
        assert np.abs(wide.cdf(4.0 * ts) - narrow.cdf(ts)).max() < band


class TestRectLaplaceQuadrature:
    def test_matches_closed_form_1d(self):
        got = rect_laplace_quadrature(1.0, np.zeros(1), cube(1, 0.5))
        assert got == pytest.approx(1.0 / math.cosh(math.sqrt(2.0) * 0.5), abs=1e-9)

    def test_dimension_monotone(self):
        # exits happen sooner in higher dimension: larger Laplace transform
        v1 = rect_laplace_quadrature(1.0, np.zeros(1), cube(1, 0.5))
        v2 = rect_laplace_quadrature(1.0, np.zeros(2), cube(2, 0.5))
        assert v2 > v1
