"""Exact arrival sampling for Brownian motion on an axis-aligned rectangle.

An arrival is the earlier of an exponential lifetime clock and the first
exit from the rectangle, together with the exact position at that moment.
Coordinates of a Brownian motion on a product domain are independent, so the
rectangle exit time is the minimum of the per-coordinate interval exit times;
conditioned on which coordinate exits first (and when), every other
coordinate is constrained only by its own survival, and its position follows
the survival-conditioned interval law.  No bridge sampling is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStart, KernelDomainError
from .kernels import (
    DEFAULT_ACCURACY,
    Interval,
    KernelAccuracy,
    exit_samples_from_uniforms,
    position_samples_from_uniforms,
)

__all__ = ["Rectangle", "Arrival", "sample_arrival", "cube"]


@dataclass(frozen=True)
class Rectangle:
    """Product of open intervals, one per coordinate."""

    intervals: tuple[Interval, ...]

    def __post_init__(self):
        if len(self.intervals) < 1:
            raise KernelDomainError("rectangle needs at least one coordinate")
        object.__setattr__(self, "intervals", tuple(self.intervals))

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def lows(self) -> np.ndarray:
        return np.array([iv.lo for iv in self.intervals])

    @property
    def highs(self) -> np.ndarray:
        return np.array([iv.hi for iv in self.intervals])

    @property
    def center(self) -> np.ndarray:
        return np.array([iv.center for iv in self.intervals])

    def contains(self, x, strict: bool = True) -> bool:
        x = np.asarray(x, float)
        if x.shape != (self.dim,):
            raise KernelDomainError(f"point has shape {x.shape}, expected ({self.dim},)")
        return all(iv.contains(float(xi), strict) for xi, iv in zip(x, self.intervals))

    def is_cube(self, tol: float = 0.0) -> bool:
        """Centered cube (-r, r)^d up to tol."""
        r = self.intervals[0].half_width
        return all(
            abs(iv.half_width - r) <= tol and abs(iv.center) <= tol
            for iv in self.intervals
        )

    def boundary_distance(self, x) -> np.ndarray:
        """Distance to the boundary (min over faces); exact for boxes."""
        x = np.asarray(x, float)
        lo = self.lows
        hi = self.highs
        return np.minimum(x - lo, hi - x).min(axis=-1)


def cube(dim: int, r: float) -> Rectangle:
    """The centered cube (-r, r)^dim."""
    return Rectangle(tuple(Interval(-r, r) for _ in range(dim)))


@dataclass(frozen=True, eq=False)
class Arrival:
    """One particle lifetime: elapsed time, position, and how it ended.

    exited=True means boundary absorption (exactly one coordinate sits
    bit-exactly on its endpoint); otherwise the clock rang strictly inside.
    """

    dt: float
    pos: np.ndarray
    exited: bool


# Per-particle uniform layout (a fixed number of draws regardless of the
# outcome, so sequential scalar sampling and counter-indexed batch sampling
# consume identically):
#   0          lifetime clock
#   1+2j, 2+2j exit side / exit time of coordinate j
#   1+2d+j     survival-conditioned position of coordinate j
#              (the draw for the exiting coordinate is burned)
# The offspring draw, when a branching engine needs one, comes after these.


def n_arrival_uniforms(dim: int) -> int:
    return 1 + 3 * dim


def sample_arrival(x, rect: Rectangle, clock_rate: float, rng,
                   acc: KernelAccuracy = DEFAULT_ACCURACY) -> Arrival:
    """Sample min(lifetime clock, rectangle exit) and the position there.

    The lifetime is exponential(clock_rate); rng needs only ``random()``.
    """
    if clock_rate <= 0:
        raise ValueError("clock_rate must be positive")
    x = np.asarray(x, float)
    if not rect.contains(x, strict=True):
        raise DegenerateStart(f"start {x} not strictly inside the rectangle")
    d = rect.dim

    u = np.array([rng.random() for _ in range(n_arrival_uniforms(d))])
    tau_clock = -math.log1p(-u[0]) / clock_rate

    etas = np.empty(d)
    hi_side = np.empty(d, bool)
    for j, iv in enumerate(rect.intervals):
        eta_j, hi_j = exit_samples_from_uniforms(
            np.asarray(u[1 + 2 * j]), np.asarray(u[2 + 2 * j]), float(x[j]), iv, acc
        )
        etas[j] = eta_j
        hi_side[j] = bool(hi_j)

    i = int(np.argmin(etas))
    eta = float(etas[i])
    exited = eta <= tau_clock
    t_cond = eta if exited else tau_clock

    pos = np.empty(d)
    for j, iv in enumerate(rect.intervals):
        u_pos = u[1 + 2 * d + j]
        if exited and j == i:
            continue  # draw burned; endpoint set below
        pos[j] = float(
            position_samples_from_uniforms(np.asarray(u_pos), t_cond, float(x[j]), iv, acc)
        )
    if exited:
        iv = rect.intervals[i]
        pos[i] = iv.hi if hi_side[i] else iv.lo

    return Arrival(dt=t_cond, pos=pos, exited=exited)
