"""Euler-discretized automatic-differentiation weights for general diffusions.

The derivative of boundary/occupation functionals of a diffusion can be
written as the expectation of the functional times a stochastic-integral
weight: run the diffusion X together with its tangent process Y, accumulate
the clock A_t = Int theta dr with theta(r, y) = 1/(dist(y, boundary)^2 (S - r)),
stop at zeta = first time A >= 1 (which happens before both the exit time and
the horizon), and integrate W = Int_0^zeta theta (sigma^{-1} Y)^T dW.

This module is experimental by design: paths are Euler-discretized with
per-path adaptive sub-stepping near the clock blow-up, exits are detected at
grid points, and no discretization-error guarantee is attached.  Validation
runs against the exact one-dimensional closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import erfc

from .errors import ClockUnderResolved, DegenerateStart
from .rect import Rectangle

__all__ = [
    "DiffusionSpec",
    "EulerConfig",
    "ClockOutcome",
    "step_with_tangent",
    "sample_ad_weight",
    "sample_ad_weights_batch",
    "boundary_gradient_samples",
    "interior_gradient_samples",
    "ExponentialLifetime",
    "GammaHalfLifetime",
    "SqrtExponentialLifetime",
]


@dataclass(frozen=True)
class DiffusionSpec:
    """Drift, diffusion matrix, and their Jacobians (for the tangent flow).

    All callables are vectorized over a leading batch axis:
    mu (n,d)->(n,d); sigma (n,d)->(n,d,d); dmu (n,d)->(n,d,d) the Jacobian
    of mu; dsigma (n,d)->(n,d,d,d) where [:, i] is the Jacobian of the i-th
    column of sigma.  sigma must be invertible on the closed domain.
    """

    mu: Callable[[np.ndarray], np.ndarray]
    sigma: Callable[[np.ndarray], np.ndarray]
    dmu: Callable[[np.ndarray], np.ndarray]
    dsigma: Callable[[np.ndarray], np.ndarray]

    @staticmethod
    def brownian(d: int) -> "DiffusionSpec":
        eye = np.eye(d)
        return DiffusionSpec(
            mu=lambda x: np.zeros_like(x),
            sigma=lambda x: np.broadcast_to(eye, (*x.shape[:-1], d, d)).copy(),
            dmu=lambda x: np.zeros((*x.shape[:-1], d, d)),
            dsigma=lambda x: np.zeros((*x.shape[:-1], d, d, d)),
        )

    @staticmethod
    def linear_drift(a_matrix: np.ndarray) -> "DiffusionSpec":
        a = np.asarray(a_matrix, float)
        d = a.shape[0]
        eye = np.eye(d)
        return DiffusionSpec(
            mu=lambda x: x @ a.T,
            sigma=lambda x: np.broadcast_to(eye, (*x.shape[:-1], d, d)).copy(),
            dmu=lambda x: np.broadcast_to(a, (*x.shape[:-1], d, d)).copy(),
            dsigma=lambda x: np.zeros((*x.shape[:-1], d, d, d)),
        )


@dataclass(frozen=True)
class EulerConfig:
    """Time discretization: base step, clock horizon, sub-stepping cap."""

    dt: float = 1e-4
    horizon: float = 1.0
    theta_cap: float = 0.05  # max theta*dt per step; bounds the clock overshoot
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.dt <= 0 or self.horizon <= 0 or not 0 < self.theta_cap <= 0.1:
            raise ValueError("invalid EulerConfig")


def _euler_tangent_step(x, y, spec: DiffusionSpec, dt, dw):
    """One Euler-Maruyama step of (X, Y) sharing the increment dw.

    x (n,d), y (n,d,d), dt (n,), dw (n,d).
    """
    dts = dt[:, None]
    x_new = x + spec.mu(x) * dts + np.einsum("nij,nj->ni", spec.sigma(x), dw)
    dmu = spec.dmu(x)
    dsig = spec.dsigma(x)
    y_new = y + np.einsum("nij,njk->nik", dmu, y) * dts[..., None]
    y_new += np.einsum("ni,nijk,nkl->njl", dw, dsig, y)
    return x_new, y_new


def step_with_tangent(state, spec: DiffusionSpec, dt: float, rng):
    """Single-path Euler step of (X, Y); returns (X', Y', dW)."""
    x, y = state
    x = np.asarray(x, float)[None, :]
    y = np.asarray(y, float)[None, :, :]
    dw = math.sqrt(dt) * rng.standard_normal(x.shape[1])
    xn, yn = _euler_tangent_step(x, y, spec, np.array([dt]), dw[None, :])
    return xn[0], yn[0], dw


@dataclass(eq=False)
class ClockOutcome:
    """Per-path results of a weight-clock simulation (struct of arrays)."""

    weight: np.ndarray            # (n, d) stochastic-integral weight
    clock_time: np.ndarray        # (n,) time when the clock reached 1
    position: np.ndarray          # (n, d) X at that time
    tangent: np.ndarray           # (n, d, d) Y at that time
    clock_integral: np.ndarray    # (n,) final clock value, in [1, 1 + cap]
    exited_before_clock: np.ndarray  # (n,) bool; discretization artifact


def _inside(x, rect: Rectangle):
    lo = rect.lows
    hi = rect.highs
    return np.all((x > lo) & (x < hi), axis=-1)


def sample_ad_weights_batch(x, spec: DiffusionSpec, domain: Rectangle,
                            s, config: EulerConfig, n: int, rng) -> ClockOutcome:
    """Simulate n weight clocks from x.

    ``s`` selects the functional: None for the boundary weight (horizon = T),
    a scalar or per-path array for the occupation weight at time s (horizon
    s /\\ T).  Steps shrink adaptively so no single step adds more than
    ``theta_cap`` to the clock; the clock therefore overshoots 1 by at most
    that much, and failure of that bound raises ClockUnderResolved.
    """
    x = np.asarray(x, float)
    d = domain.dim
    if x.shape != (d,):
        raise ValueError(f"x has shape {x.shape}, expected ({d},)")
    if not _inside(x[None, :], domain)[0]:
        raise DegenerateStart(f"start {x} not strictly inside the domain")
    if s is None:
        horizon = np.full(n, config.horizon)
    else:
        horizon = np.minimum(np.broadcast_to(np.asarray(s, float), (n,)), config.horizon)
        if np.any(horizon <= 0):
            raise ValueError("s must be positive")

    pos = np.tile(x, (n, 1))
    tan = np.tile(np.eye(d), (n, 1, 1))
    t = np.zeros(n)
    a = np.zeros(n)
    w = np.zeros((n, d))
    exited = np.zeros(n, bool)
    active = np.ones(n, bool)

    steps = 0
    while active.any():
        steps += 1
        if steps > config.max_steps:
            raise ClockUnderResolved("step budget exhausted before the clock closed")
        idx = np.flatnonzero(active)
        xa = pos[idx]
        ya = tan[idx]
        dist = domain.boundary_distance(xa)
        theta = 1.0 / (dist ** 2 * (horizon[idx] - t[idx]))
        dt = np.minimum(config.dt, config.theta_cap / theta)
        dt = np.minimum(dt, 0.5 * (horizon[idx] - t[idx]))
        dw = np.sqrt(dt)[:, None] * rng.standard_normal((idx.size, d))

        sig_inv_y = np.linalg.solve(spec.sigma(xa), ya)
        w[idx] += theta[:, None] * np.einsum("nij,ni->nj", sig_inv_y, dw)
        a[idx] += theta * dt
        t[idx] += dt
        xn, yn = _euler_tangent_step(xa, ya, spec, dt, dw)
        pos[idx] = xn
        tan[idx] = yn

        closed = a[idx] >= 1.0
        out = ~_inside(xn, domain)
        exited[idx[out & ~closed]] = True
        active[idx[closed | out]] = False

    if np.any(a[a >= 1.0] > 1.1):
        raise ClockUnderResolved("clock integral overshot 1 by more than 10%")
    return ClockOutcome(weight=w, clock_time=t, position=pos, tangent=tan,
                        clock_integral=a, exited_before_clock=exited)


def sample_ad_weight(x, spec: DiffusionSpec, domain: Rectangle, s,
                     config: EulerConfig, rng):
    """Single-path version: returns (weight vector, outcome record)."""
    out = sample_ad_weights_batch(x, spec, domain, s, config, 1, rng)
    scalar = ClockOutcome(
        weight=out.weight[0], clock_time=float(out.clock_time[0]),
        position=out.position[0], tangent=out.tangent[0],
        clock_integral=float(out.clock_integral[0]),
        exited_before_clock=bool(out.exited_before_clock[0]),
    )
    return out.weight[0], scalar


def _continue_paths(pos, t, spec: DiffusionSpec, domain: Rectangle, dt: float,
                    rng, target_t=None):
    """Plain Euler continuation until exit (or per-path target time).

    Returns (positions, times, exited_mask); times are exit times where
    exited, else the reached target.
    """
    pos = pos.copy()
    t = t.copy()
    n, d = pos.shape
    exited = ~_inside(pos, domain)  # paths that left during the clock phase
    active = ~exited
    if target_t is not None:
        active &= t < target_t
    while active.any():
        idx = np.flatnonzero(active)
        step = np.full(idx.size, dt)
        if target_t is not None:
            step = np.minimum(step, target_t[idx] - t[idx])
        dw = np.sqrt(step)[:, None] * rng.standard_normal((idx.size, d))
        xa = pos[idx]
        pos[idx] = xa + spec.mu(xa) * step[:, None] + np.einsum(
            "nij,nj->ni", spec.sigma(xa), dw
        )
        t[idx] += step
        out = ~_inside(pos[idx], domain)
        exited[idx[out]] = True
        done = out
        if target_t is not None:
            done = done | (t[idx] >= target_t[idx] - 1e-15)
        active[idx[done]] = False
    return pos, t, exited


def boundary_gradient_samples(x, spec: DiffusionSpec, domain: Rectangle,
                              h, beta: float, config: EulerConfig, n: int,
                              rng) -> np.ndarray:
    """Per-path samples of e^{-beta eta} h(X_eta) W_boundary, shape (n, d).

    Their mean estimates the gradient of x -> E[e^{-beta eta} h(X_eta)].
    """
    clock = sample_ad_weights_batch(x, spec, domain, None, config, n, rng)
    pos, eta, exited = _continue_paths(clock.position, clock.clock_time, spec,
                                       domain, config.dt, rng)
    # paths flagged exited during the clock already sit outside
    eta = np.where(clock.exited_before_clock, clock.clock_time, eta)
    vals = np.exp(-beta * eta) * np.asarray(h(pos), float)
    return vals[:, None] * clock.weight


def interior_gradient_samples(x, spec: DiffusionSpec, domain: Rectangle,
                              g, beta: float, config: EulerConfig, n: int,
                              rng) -> np.ndarray:
    """Per-path samples whose mean estimates D E[Int_0^eta e^{-beta s} g(X_s) ds].

    Randomizes the time with an exponential(beta) draw: the sample is
    g(X_s) W_interior(s) / beta on {s < eta}, zero otherwise.
    """
    s = rng.exponential(1.0 / beta, size=n)
    clock = sample_ad_weights_batch(x, spec, domain, s, config, n, rng)
    pos, t_end, exited = _continue_paths(clock.position, clock.clock_time, spec,
                                         domain, config.dt, rng, target_t=s)
    alive = ~(exited | clock.exited_before_clock)
    vals = np.zeros(n)
    vals[alive] = np.asarray(g(pos[alive]), float) / beta
    return vals[:, None] * clock.weight


# ---------------------------------------------------------------------------
# lifetime laws for the general (non-exponential) product weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialLifetime:
    """rho(t) = rate e^{-rate t}; the reweighting factors collapse to 1 when
    rate == beta."""

    rate: float

    def sample(self, rng, n: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, size=n)

    def pdf(self, t):
        t = np.asarray(t, float)
        return self.rate * np.exp(-self.rate * t)

    def sf(self, t):
        t = np.asarray(t, float)
        return np.exp(-self.rate * t)

    def interior_weight(self, t, beta: float):
        return beta * np.exp(-beta * np.asarray(t, float)) / self.pdf(t)

    def boundary_weight(self, t, beta: float):
        return np.exp(-beta * np.asarray(t, float)) / self.sf(t)


@dataclass(frozen=True)
class GammaHalfLifetime:
    """Gamma(shape 1/2, rate): rho(t) = sqrt(rate/(pi t)) e^{-rate t}.

    With rate < beta both reweighting factors stay bounded, including the
    1/sqrt(t) blow-up the occupation weight needs to integrate."""

    rate: float

    def sample(self, rng, n: int) -> np.ndarray:
        z = rng.standard_normal(n)
        return z * z / (2.0 * self.rate)

    def pdf(self, t):
        t = np.asarray(t, float)
        return np.sqrt(self.rate / (math.pi * t)) * np.exp(-self.rate * t)

    def sf(self, t):
        t = np.asarray(t, float)
        return erfc(np.sqrt(self.rate * t))

    def interior_weight(self, t, beta: float):
        t = np.asarray(t, float)
        return beta * np.sqrt(math.pi * t / self.rate) * np.exp(-(beta - self.rate) * t)

    def boundary_weight(self, t, beta: float):
        t = np.asarray(t, float)
        return np.exp(-beta * t) / self.sf(t)


@dataclass(frozen=True)
class SqrtExponentialLifetime:
    """Generalized gamma: rho(t) = rate/(2 sqrt t) e^{-rate sqrt t}
    (sqrt(t) is exponential(rate))."""

    rate: float

    def sample(self, rng, n: int) -> np.ndarray:
        e = rng.exponential(1.0 / self.rate, size=n)
        return e * e

    def pdf(self, t):
        t = np.asarray(t, float)
        return self.rate / (2.0 * np.sqrt(t)) * np.exp(-self.rate * np.sqrt(t))

    def sf(self, t):
        t = np.asarray(t, float)
        return np.exp(-self.rate * np.sqrt(t))

    def interior_weight(self, t, beta: float):
        t = np.asarray(t, float)
        return (2.0 * beta / self.rate) * np.sqrt(t) * np.exp(
            -beta * t + self.rate * np.sqrt(t)
        )

    def boundary_weight(self, t, beta: float):
        t = np.asarray(t, float)
        return np.exp(-beta * t + self.rate * np.sqrt(t))
