"""Independent ground-truth generators backing the test suite.

Nothing here shares a code path with the samplers it checks: the two-point
BVP solver is plain finite-difference collocation with a damped Newton
iteration, the linear-problem solution comes from its sinh/cosh closed form,
and the exit-law check is brute-force Euler simulation.  Expected values
asserted by tests are produced by these oracles, never typed in by hand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.linalg import solve_banded

from .errors import NewtonDiverged
from .kernels import Interval, exit_time_survival
from .problem import ProblemSpec
from .rect import Rectangle

__all__ = [
    "BVPSolution",
    "solve_bvp_1d",
    "pde_nonlinearity",
    "closed_phi",
    "euler_exit_mc",
    "EmpiricalExitLaw",
    "rect_laplace_quadrature",
]


@dataclass(frozen=True, eq=False)
class BVPSolution:
    """Converged collocation profile of a 1D two-point boundary problem."""

    grid: np.ndarray
    values: np.ndarray
    residual: float

    def at(self, x: float) -> float:
        return float(np.interp(x, self.grid, self.values))


def solve_bvp_1d(f_total, h_lo: float, h_hi: float, r: float,
                 grid_n: int = 4001, tol: float = 1e-11) -> BVPSolution:
    """Solve (1/2) u'' + f_total(x, u) = 0 on (-r, r), u(+-r) = h_hi/h_lo.

    Second-order central differences on a uniform grid, damped Newton from
    the linear interpolant of the boundary data.  Residuals accumulate in
    extended precision: the float64 second difference loses eps/h^2 digits
    to cancellation, which would put the collocation residual floor above
    tol on fine grids.
    """
    if grid_n < 5:
        raise ValueError("grid_n too small")
    ld = np.longdouble
    x = np.linspace(-r, r, grid_n)
    h = ld(x[1] - x[0])
    xi = x[1:-1]
    lo, hi = ld(h_lo), ld(h_hi)

    def residual(ui):
        full = np.concatenate(([lo], ui.astype(ld), [hi]))
        lap = (full[:-2] - 2.0 * full[1:-1] + full[2:]) / (2.0 * h * h)
        return lap + np.asarray(f_total(xi, np.asarray(ui, float)), float)

    ui = np.asarray(h_lo + (h_hi - h_lo) * (xi + r) / (2.0 * r), ld)
    res = residual(ui)
    norm = float(np.abs(res).max())
    for _ in range(100):
        if norm < tol:
            break
        uf = np.asarray(ui, float)
        eps = 1e-7 * np.maximum(1.0, np.abs(uf))
        dfdu = (f_total(xi, uf + eps) - f_total(xi, uf - eps)) / (2.0 * eps)
        hf = float(h)
        ab = np.zeros((3, ui.size))
        ab[0, 1:] = 1.0 / (2.0 * hf * hf)
        ab[1, :] = -1.0 / (hf * hf) + dfdu
        ab[2, :-1] = 1.0 / (2.0 * hf * hf)
        step = solve_banded((1, 1), ab, -np.asarray(res, float))
        lam = 1.0
        while True:
            trial = ui + ld(lam) * step.astype(ld)
            res_t = residual(trial)
            norm_t = float(np.abs(res_t).max())
            if norm_t < (1.0 - 0.25 * lam) * norm or norm_t < tol:
                ui, res, norm = trial, res_t, norm_t
                break
            lam *= 0.5
            if lam < 1e-10:
                # stagnated at the float64 Newton-step floor; fine if already
                # far below the 1e-9 contract
                if norm < 1e-9:
                    lam = None
                    break
                raise NewtonDiverged(f"line search stalled at residual {norm:.2e}")
        if lam is None:
            break
    else:
        raise NewtonDiverged(f"no convergence after 100 damped iterations (residual {norm:.2e})")
    values = np.concatenate(([h_lo], np.asarray(ui, float), [h_hi]))
    return BVPSolution(grid=x, values=values, residual=norm)


def pde_nonlinearity(spec: ProblemSpec):
    """The source term beta (sum_l c_l(x) u^{|l|} - u) as an (x, u) callable."""
    if spec.rect.dim != 1 or spec.n_marks != 0:
        raise ValueError("BVP oracle covers 1D value-only problems")

    def f_total(x, u):
        x = np.asarray(x, float)[..., None]
        acc = -np.asarray(u, float)
        for t in spec.terms:
            acc = acc + t.c(x) * np.asarray(u, float) ** t.l.total
        return spec.beta * acc

    return f_total


def closed_phi(x, beta: float, r: float, h_lo: float, h_hi: float):
    """(phi, phi') for the linear problem (1/2) phi'' = beta phi on (-r, r).

    phi(x) = H(x, r) h_hi + H(x, -r) h_lo with
    H(x, y) = sinh(sqrt(2 beta)(x + y)) / sinh(2 sqrt(2 beta) y).
    """
    s = math.sqrt(2.0 * beta)
    x = np.asarray(x, float)

    def H(y):
        return np.sinh(s * (x + y)) / math.sinh(2.0 * s * y)

    def dH(y):
        return s * np.cosh(s * (x + y)) / math.sinh(2.0 * s * y)

    phi = H(r) * h_hi + H(-r) * h_lo
    dphi = dH(r) * h_hi + dH(-r) * h_lo
    if phi.ndim == 0:
        return float(phi), float(dphi)
    return phi, dphi


@dataclass(frozen=True, eq=False)
class EmpiricalExitLaw:
    """Sorted empirical exit times and sides from brute-force simulation."""

    times: np.ndarray
    hi_side: np.ndarray

    @property
    def n(self) -> int:
        return len(self.times)

    def cdf(self, t) -> np.ndarray:
        return np.searchsorted(self.times, np.asarray(t, float), side="right") / self.n

    def dkw_epsilon(self, alpha: float = 0.01) -> float:
        """Dvoretzky-Kiefer-Wolfowitz band half-width at confidence 1 - alpha."""
        return math.sqrt(math.log(2.0 / alpha) / (2.0 * self.n))


def euler_exit_mc(x: float, iv: Interval, dt: float, n: int, rng) -> EmpiricalExitLaw:
    """First-crossing exit times of n Euler paths from iv started at x."""
    pos = np.full(n, float(x))
    alive = np.arange(n)
    times = np.empty(n)
    sides = np.empty(n, bool)
    sdt = math.sqrt(dt)
    step = 0
    while alive.size:
        step += 1
        pos[alive] += sdt * rng.standard_normal(alive.size)
        out = (pos[alive] <= iv.lo) | (pos[alive] >= iv.hi)
        if out.any():
            done = alive[out]
            times[done] = step * dt
            sides[done] = pos[done] >= iv.hi
            alive = alive[~out]
    order = np.argsort(times, kind="stable")
    return EmpiricalExitLaw(times=times[order], hi_side=sides[order])


def rect_laplace_quadrature(beta: float, x, rect: Rectangle) -> float:
    """E[e^{-beta eta}] on a rectangle by quadrature of the product survival law.

    E[e^{-beta eta}] = 1 - beta Int_0^inf e^{-beta t} prod_j P(eta_j > t) dt;
    deterministic cross-check for the Monte Carlo delta estimate.
    """
    x = np.asarray(x, float)

    def integrand(t):
        s = 1.0
        for j, iv in enumerate(rect.intervals):
            s *= exit_time_survival(t, float(x[j]), iv)
        return math.exp(-beta * t) * s

    val, _ = integrate.quad(integrand, 0.0, np.inf, limit=400)
    return 1.0 - beta * val
