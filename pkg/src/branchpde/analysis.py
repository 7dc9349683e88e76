"""Validity certification for the branching representation.

Four independent checks gate a problem instance:

* extinction: the branching Brownian motion dies out almost surely when
  beta (mean offspring - 1) <= lambda_1 / 2, with lambda_1 the first
  Dirichlet eigenvalue of the domain;
* delta, the branch-before-exit probability bound 1 - inf_x E[e^{-beta eta^x}];
* the generating-function threshold gamma of the dominating offspring law,
  which must dominate C0^q for L^q-boundedness of the estimator;
* a direct supersolution residual check for hand-supplied certificates.

delta is closed-form in one dimension and estimated by exact-exit Monte
Carlo at the center (the infimum point of any box, since each coordinate's
survival is maximized there) in higher dimension; the Monte Carlo error is
folded conservatively into gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    AlwaysAdmissible,
    NeverAdmissible,
    Supercritical,
    UnsupportedDomain,
)
from .kernels import Interval, exit_samples_from_uniforms
from .problem import ProblemSpec
from .rect import Rectangle
from .registry import grid_sup_norm
from .rng import Stream

__all__ = [
    "ThresholdReport",
    "lambda1_box",
    "extinction_margin",
    "compute_delta",
    "compute_delta_with_se",
    "gamma_threshold",
    "compute_c0",
    "admissible_radius",
    "supersolution_residual",
    "certify",
]

Z_DELTA = 2.576  # MC error multiplier folded into the conservative gamma


@dataclass(frozen=True)
class ThresholdReport:
    """Certification summary for one problem instance at moment order q."""

    lambda1: float
    extinction_margin: float
    delta: float
    gamma: float
    c0: float
    q: int
    admissible: bool
    s_star: float = float("nan")
    delta_se: float = 0.0
    notes: tuple[str, ...] = ()


def lambda1_box(rect: Rectangle) -> float:
    """First Dirichlet eigenvalue of -Laplace on a box: sum_j pi^2/width_j^2."""
    return float(sum(math.pi ** 2 / iv.width ** 2 for iv in rect.intervals))


def extinction_margin(beta: float, terms, d: int, r: float) -> float:
    """beta (sum |l| p_l - 1) - lambda_1/2 for the cube (-r, r)^d.

    Nonpositive values certify almost-sure extinction.
    """
    if beta <= 0 or r <= 0 or d < 1:
        raise ValueError("need beta > 0, r > 0, d >= 1")
    mean_offspring = sum(t.l.total * t.p for t in terms)
    lam1 = d * math.pi ** 2 / (4.0 * r ** 2)
    return beta * (mean_offspring - 1.0) - 0.5 * lam1


@lru_cache(maxsize=4)
def _unit_center_taus(d: int, mc_samples: int, seed: int):
    """Exit times from the center of d unit intervals, in unit time.

    Exit times for any box then follow by Brownian scaling (eta_j =
    tau_j * width_j^2), so one sampling pass serves a whole family of
    domains under a common seed.
    """
    stream = Stream.from_seed(seed)
    unit = Interval(0.0, 1.0)
    taus = np.empty((mc_samples, d))
    for j in range(d):
        u = stream.uniforms(2 * mc_samples)
        taus[:, j], _ = exit_samples_from_uniforms(
            u[:mc_samples], u[mc_samples:], 0.5, unit
        )
    return taus


def _delta_mc(beta: float, rect: Rectangle, mc_samples: int, seed: int):
    """(delta, standard error) by exact sampling of the exit time at the center."""
    taus = _unit_center_taus(rect.dim, mc_samples, seed)
    widths_sq = np.array([iv.width ** 2 for iv in rect.intervals])
    eta_min = (taus * widths_sq).min(axis=1)
    vals = np.exp(-beta * eta_min)
    delta = 1.0 - float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(mc_samples))
    return delta, se


def compute_delta(beta: float, rect: Rectangle, mc_samples: int = 10 ** 6,
                  seed: int = 2024) -> float:
    """delta = 1 - inf_x E[e^{-beta eta^x}]; the infimum of a box is at its center.

    Closed form in one dimension; exact-exit Monte Carlo otherwise (standard
    error available via ``compute_delta_with_se``).
    """
    return compute_delta_with_se(beta, rect, mc_samples, seed)[0]


def compute_delta_with_se(beta: float, rect: Rectangle, mc_samples: int = 10 ** 6,
                          seed: int = 2024) -> tuple[float, float]:
    if beta <= 0:
        raise ValueError("beta must be positive")
    if rect.dim == 1:
        r = rect.intervals[0].half_width
        return 1.0 - 1.0 / math.cosh(math.sqrt(2.0 * beta) * r), 0.0
    return _delta_mc(beta, rect, mc_samples, seed)


def _offspring_polynomial(terms) -> np.polynomial.Polynomial:
    deg = max(t.l.total for t in terms)
    coeffs = np.zeros(deg + 1)
    for t in terms:
        coeffs[t.l.total] += t.p
    return np.polynomial.Polynomial(coeffs)


def gamma_threshold(terms, delta: float, q: int = 1) -> tuple[float, float]:
    """(gamma, s_star) for the dominating offspring law.

    The dominating law replaces branching by extinction with probability
    1 - delta: ft(s) = 1 - delta + delta f(s) with f(s) = sum_l p_l s^{|l|}.
    gamma = s*/ft(s*) where s* solves s ft'(s) = ft(s); gamma bounds C0^q
    for L^q-boundedness (q enters only that comparison).
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError("delta must lie in [0, 1)")
    if q < 1:
        raise ValueError("q must be >= 1")
    f = _offspring_polynomial(terms)
    mean_dom = delta * float(f.deriv()(1.0))
    if mean_dom >= 1.0:
        raise Supercritical(
            f"dominating mean offspring {mean_dom:.4f} >= 1; no threshold exists"
        )
    coeffs = delta * f.coef
    coeffs[0] += 1.0 - delta
    ft = np.polynomial.Polynomial(coeffs)
    ftp = ft.deriv()
    if ft.degree() <= 1:
        # affine generating function: s* sits at the radius of convergence
        slope = float(ftp.coef[0]) if ftp.degree() >= 0 else 0.0
        return (math.inf if slope == 0.0 else 1.0 / slope), math.inf

    def g(s):
        return s * ftp(s) - ft(s)

    lo, hi = 1.0, 2.0
    while g(hi) <= 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise Supercritical("no crossing found below s = 1e12")
    s = 0.5 * (lo + hi)
    gpp = ft.deriv(2)
    for _ in range(200):
        val = g(s)
        if val > 0:
            hi = s
        else:
            lo = s
        deriv = s * float(gpp(s))  # g'(s) = s ft''(s)
        step = val / deriv if deriv > 0 else 0.0
        s_new = s - step
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) < 1e-15 * s:
            s = s_new
            break
        s = s_new
    gamma = s / float(ft(s))
    return gamma, s


def _sup_norm(fn, rect: Rectangle) -> float:
    if hasattr(fn, "sup_on"):
        return float(fn.sup_on(rect))
    return grid_sup_norm(fn, rect)


def _gradient_weight_sup(spec: ProblemSpec, grid_n: int = 4097) -> float:
    """sup over x, y of |b_i(x) W(x, y)|, maximized over directions i.

    For fixed x the weight's two branches are largest at the nearer endpoint,
    giving |W| <= sqrt(2 beta)/tanh(sqrt(2 beta)(r - |x - center|)); the sup
    over x runs on a refining grid.
    """
    iv = spec.rect.intervals[0]
    s = math.sqrt(2.0 * spec.beta)
    r = iv.half_width
    best = 0.0
    n = grid_n
    prev = -np.inf
    for _ in range(6):
        x = iv.center + (np.linspace(-1.0, 1.0, n)[1:-1]) * r
        wmax = s / np.tanh(s * (r - np.abs(x - iv.center)))
        cur = 0.0
        for b in spec.b:
            cur = max(cur, float(np.max(np.abs(b(x[:, None])) * wmax)))
        best = cur
        if prev > -np.inf and abs(cur - prev) <= 1e-6 * max(1.0, cur):
            break
        prev = cur
        n = 2 * n - 1
    return best


def compute_c0(spec: ProblemSpec, q: int = 1) -> float:
    """The per-factor product bound max(sup|h|, sup_l sup|c_l|/p_l).

    Sup norms are taken over the closed rectangle.  In the 1D gradient case
    the bound on |b_i(x) W(x, y)| (or 1, whichever is larger) multiplies in,
    dominating the extra mark factors.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    rect = spec.rect
    c0 = _sup_norm(spec.h, rect)
    for t in spec.terms:
        c0 = max(c0, _sup_norm(t.c, rect) / t.p)
    if spec.n_marks >= 1:
        c0 *= max(_gradient_weight_sup(spec), 1.0)
    return c0


def _report_for(spec: ProblemSpec, q: int, mc_samples: int, seed: int) -> "ThresholdReport":
    rect = spec.rect
    lam1 = lambda1_box(rect)
    mean_offspring = spec.mean_offspring
    margin = spec.beta * (mean_offspring - 1.0) - 0.5 * lam1
    delta, se = compute_delta_with_se(spec.beta, rect, mc_samples, seed)
    delta_cons = min(delta + Z_DELTA * se, 1.0)
    c0 = compute_c0(spec, q)
    notes: list[str] = []
    try:
        gamma, s_star = gamma_threshold(spec.terms, delta_cons, q)
        admissible = c0 ** q <= gamma
    except Supercritical as exc:
        gamma, s_star = float("nan"), float("nan")
        admissible = False
        notes.append(str(exc))
    if margin > 0:
        notes.append("extinction criterion violated: branching may not die out")
    return ThresholdReport(
        lambda1=lam1,
        extinction_margin=margin,
        delta=delta,
        gamma=gamma,
        c0=c0,
        q=q,
        admissible=admissible,
        s_star=s_star,
        delta_se=se,
        notes=tuple(notes),
    )


def certify(spec: ProblemSpec, q: int = 1, mc_samples: int = 10 ** 6,
            seed: int = 2024) -> ThresholdReport:
    """Full certification report for one problem instance."""
    return _report_for(spec, q, mc_samples, seed)


def admissible_radius(problem_family, q: int, tol: float = 2e-3,
                      r_range: tuple[float, float] = (0.02, 1.0),
                      mc_samples: int = 10 ** 6, seed: int = 2024) -> float:
    """Largest radius r with C0(r)^q <= gamma(r) for a family r -> ProblemSpec.

    Bisection on r; the same seed feeds every Monte Carlo delta evaluation,
    so the margin is a smooth deterministic function of r.
    """

    def margin(r: float) -> float:
        spec = problem_family(r)
        delta, se = compute_delta_with_se(spec.beta, spec.rect, mc_samples, seed)
        try:
            gamma, _ = gamma_threshold(spec.terms, min(delta + Z_DELTA * se, 1.0), q)
        except Supercritical:
            return -math.inf
        return gamma - compute_c0(spec, q) ** q

    r_lo, r_hi = r_range
    m_lo, m_hi = margin(r_lo), margin(r_hi)
    if m_lo < 0 and m_hi < 0:
        raise NeverAdmissible(f"margin negative on all of [{r_lo}, {r_hi}]")
    if m_lo > 0 and m_hi > 0:
        raise AlwaysAdmissible(f"margin positive on all of [{r_lo}, {r_hi}]")
    if m_lo < 0:
        raise NeverAdmissible("margin negative at the small-radius end; family is inverted")
    while r_hi - r_lo > tol:
        mid = 0.5 * (r_lo + r_hi)
        if margin(mid) >= 0:
            r_lo = mid
        else:
            r_hi = mid
    return 0.5 * (r_lo + r_hi)


def supersolution_residual(v, spec: ProblemSpec, q: int = 1,
                           grid_n: int = 2001) -> tuple[float, float]:
    """Residual check of a candidate L^q certificate v on a 1D problem.

    Returns (max interior residual, min boundary slack): v certifies when the
    residual (1/2) v'' + beta (sum_l |c_l|^q / p_l^{q-1} v^{|l|} - v) is <= 0
    throughout and v >= |h|^q on the boundary.
    """
    if spec.rect.dim != 1:
        raise UnsupportedDomain("supersolution residuals are implemented for d = 1")
    if not hasattr(v, "d2") or v.d2 is None:
        raise ValueError("v must carry an analytic second derivative (v.d2)")
    iv = spec.rect.intervals[0]
    x = np.linspace(iv.lo, iv.hi, grid_n)[1:-1][:, None]
    vx = np.asarray(v(x), float)
    vpp = np.asarray(v.d2(x), float)
    reaction = -vx.copy()
    for t in spec.terms:
        reaction += np.abs(t.c(x)) ** q / t.p ** (q - 1) * vx ** t.l.total
    residual = 0.5 * vpp + spec.beta * reaction
    ends = np.array([[iv.lo], [iv.hi]])
    slack = np.asarray(v(ends), float) - np.abs(np.asarray(spec.h(ends), float)) ** q
    return float(residual.max()), float(slack.min())
