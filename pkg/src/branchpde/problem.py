"""Problem description: the PDE data driving a branching simulation.

The solved equation is  (1/2) Lap u + beta (f(u, Du) - u) = 0  on a rectangle
with Dirichlet data h, where f is the polynomial
``f(x, y, z) = sum_l c_l(x) y^{l_0} prod_i (b_i(x) z)^{l_i}``
indexed by multi-indices l.  Each multi-index doubles as an offspring law:
a branching particle spawns ``l_0`` children estimating the solution value
and ``l_i`` children estimating the directional derivative along b_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .rect import Rectangle

__all__ = ["MultiIndex", "NonlinearityTerm", "ParticleBudget", "ProblemSpec"]


@dataclass(frozen=True)
class MultiIndex:
    """Offspring counts per mark: counts[0] value children, counts[i>=1]
    gradient children along direction i."""

    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if len(self.counts) < 1 or any(c < 0 for c in self.counts):
            raise ValueError(f"invalid multi-index {self.counts}")

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def marks(self) -> tuple[int, ...]:
        """Mark of each offspring, in birth order."""
        out: list[int] = []
        for mark, c in enumerate(self.counts):
            out.extend([mark] * c)
        return tuple(out)


@dataclass(frozen=True)
class NonlinearityTerm:
    """One monomial of the nonlinearity with its branching probability."""

    l: MultiIndex
    c: Callable[[np.ndarray], np.ndarray]
    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"branching probability must be in (0, 1], got {self.p}")


@dataclass(frozen=True)
class ParticleBudget:
    """Hard caps guarding against non-extinct parameter regimes."""

    max_particles: int = 1_000_000
    max_generations: int = 10_000

    def __post_init__(self):
        if self.max_particles <= 0 or self.max_generations <= 0:
            raise ValueError("budget limits must be positive")


@dataclass(frozen=True)
class ProblemSpec:
    """Everything the branching estimator needs about one PDE."""

    beta: float
    rect: Rectangle
    terms: tuple[NonlinearityTerm, ...]
    h: Callable[[np.ndarray], np.ndarray]
    b: tuple[Callable[[np.ndarray], np.ndarray], ...] = ()
    budget: ParticleBudget = field(default_factory=ParticleBudget)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "b", tuple(self.b))
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not self.terms:
            raise ValueError("need at least one nonlinearity term")
        widths = {len(t.l.counts) for t in self.terms}
        if len(widths) != 1:
            raise ValueError("all multi-indices must have the same length")
        m = widths.pop() - 1
        if len(self.b) != m:
            raise ValueError(f"nonlinearity uses {m} direction fields, got {len(self.b)}")
        if m >= 1 and self.rect.dim != 1:
            raise ValueError("gradient terms are supported only in dimension 1")
        total_p = sum(t.p for t in self.terms)
        if abs(total_p - 1.0) > 1e-12:
            raise ValueError(f"branching probabilities sum to {total_p}, expected 1")

    @property
    def n_marks(self) -> int:
        return len(self.b)

    @property
    def mean_offspring(self) -> float:
        return sum(t.l.total * t.p for t in self.terms)

    def cumulative_probs(self) -> np.ndarray:
        return np.cumsum([t.p for t in self.terms])
