"""Marked branching Brownian trees with boundary absorption.

One tree yields one sample of the product estimator whose expectation is the
PDE solution: exits contribute ``h(position)``, interior branchings
contribute ``c_l(position)/p_l``, and gradient-marked particles additionally
contribute ``b_mark(birth) * W(birth, arrival)`` with the closed-form
one-dimensional weight W.  An empty product is 1.

Randomness is organized so a particle's draws depend only on its label path:
every particle owns a counter-based stream, children derive theirs by
splitting the parent's.  Any traversal order therefore produces the same
tree.  ``simulate_tree`` walks depth-first with an explicit stack;
``simulate_trees_batch`` advances whole generations of many trees at once
with vectorized kernel evaluations and produces the same trees (up to float
product-ordering) from the same keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded
from .kernels import (
    DEFAULT_ACCURACY,
    Interval,
    KernelAccuracy,
    exit_samples_from_uniforms,
    position_samples_from_uniforms,
)
from .problem import MultiIndex, NonlinearityTerm, ProblemSpec
from .rect import sample_arrival
from .rng import Stream, child_keys, uniforms_from_keys

__all__ = [
    "sample_offspring",
    "simulate_psi",
    "simulate_tree",
    "simulate_trees_batch",
    "tree_stream",
    "TreeSample",
    "BatchTrees",
    "gradient_weight_1d",
]


def gradient_weight_1d(beta: float, iv: Interval, x_birth, y_arrival):
    """Closed-form derivative weight for 1D Brownian motion on an interval.

    sqrt(2 beta)/tanh(sqrt(2 beta)(xt + r)) when the arrival lies above the
    birth point, with xt the birth point recentered and r the half-width;
    the lower branch uses (xt - r) and is negative.
    """
    s = math.sqrt(2.0 * beta)
    xt = np.asarray(x_birth, float) - iv.center
    r = iv.half_width
    up = np.asarray(y_arrival, float) > np.asarray(x_birth, float)
    w = np.where(up, s / np.tanh(s * (xt + r)), s / np.tanh(s * (xt - r)))
    return float(w) if w.ndim == 0 else w


def tree_stream(seed: int, index: int) -> Stream:
    """Root-particle stream of tree ``index`` under ``seed``."""
    return Stream.from_seed(seed).child(index)


def _sample_term(terms, rng) -> NonlinearityTerm:
    u = rng.random()
    acc = 0.0
    for t in terms:
        acc += t.p
        if u < acc:
            return t
    return terms[-1]


def sample_offspring(terms, rng) -> MultiIndex:
    """Draw a multi-index l with probability p_l."""
    return _sample_term(terms, rng).l


@dataclass(frozen=True, eq=False)
class TreeSample:
    """One simulated tree: the estimator sample plus diagnostics."""

    psi: float
    particles: int
    depth: int
    root_pos: np.ndarray
    root_exited: bool


def simulate_tree(x, spec: ProblemSpec, stream: Stream,
                  acc: KernelAccuracy = DEFAULT_ACCURACY) -> TreeSample:
    """Depth-first walk of one branching tree started at x.

    ``stream`` is the root particle's stream; see the module docstring for
    how child streams derive from it.
    """
    x = np.asarray(x, float)
    rect = spec.rect
    beta = spec.beta
    budget = spec.budget
    iv0 = rect.intervals[0]

    psi = 1.0
    particles = 0
    max_depth = 0
    root_pos = None
    root_exited = False

    stack = [(x, 0, stream, 0)]
    while stack:
        birth, mark, st, depth = stack.pop()
        particles += 1
        if particles > budget.max_particles:
            raise BudgetExceeded("max_particles", budget.max_particles)
        if depth > budget.max_generations:
            raise BudgetExceeded("max_generations", budget.max_generations)
        max_depth = max(max_depth, depth)

        arrival = sample_arrival(birth, rect, beta, st, acc)
        if root_pos is None:
            root_pos = arrival.pos.copy()
            root_exited = arrival.exited

        if mark != 0:
            psi *= float(spec.b[mark - 1](birth)) * gradient_weight_1d(
                beta, iv0, float(birth[0]), float(arrival.pos[0])
            )

        if arrival.exited:
            psi *= float(spec.h(arrival.pos))
        else:
            term = _sample_term(spec.terms, st)
            psi *= float(term.c(arrival.pos)) / term.p
            for i, child_mark in enumerate(term.l.marks):
                stack.append((arrival.pos, child_mark, st.child(i), depth + 1))

    return TreeSample(psi=psi, particles=particles, depth=max_depth,
                      root_pos=root_pos, root_exited=root_exited)


def simulate_psi(x, spec: ProblemSpec, rng: Stream,
                 acc: KernelAccuracy = DEFAULT_ACCURACY) -> float:
    """The estimator sample of one tree (see simulate_tree for diagnostics)."""
    return simulate_tree(x, spec, rng, acc).psi


@dataclass(eq=False)
class BatchTrees:
    """Vectorized tree results for a block of trees."""

    psi: np.ndarray          # (n,)
    particles: np.ndarray    # (n,) per-tree particle counts
    root_pos: np.ndarray     # (n, d) root arrival positions
    root_dt: np.ndarray      # (n,) root arrival times
    root_exited: np.ndarray  # (n,) bool
    max_depth: int


def simulate_trees_batch(x, spec: ProblemSpec, keys: np.ndarray,
                         acc: KernelAccuracy = DEFAULT_ACCURACY) -> BatchTrees:
    """Simulate one tree per root key, generation-synchronously.

    Identical in law (and in per-particle uniforms) to simulate_tree; only
    the order in which the product factors accumulate differs.
    """
    x = np.asarray(x, float)
    rect = spec.rect
    d = rect.dim
    beta = spec.beta
    budget = spec.budget
    iv0 = rect.intervals[0]
    lows = rect.lows
    highs = rect.highs
    cum_p = spec.cumulative_probs()
    totals = np.array([t.l.total for t in spec.terms])
    marks_per_term = [np.array(t.l.marks, dtype=np.int16) for t in spec.terms]
    n_unif = 3 * d + 2  # clock, (side,time)*d, pos*d, offspring
    counters = np.arange(n_unif, dtype=np.uint64)

    n = len(keys)
    psi = np.ones(n)
    sizes = np.zeros(n, dtype=np.int64)
    root_pos = np.empty((n, d))
    root_dt = np.empty(n)
    root_exited = np.empty(n, bool)

    f_tree = np.arange(n)
    f_key = np.asarray(keys, dtype=np.uint64).copy()
    f_birth = np.broadcast_to(x, (n, d)).copy()
    f_mark = np.zeros(n, dtype=np.int16)
    depth = 0
    max_depth = 0

    while f_tree.size:
        m = f_tree.size
        np.add.at(sizes, f_tree, 1)
        if sizes.max() > budget.max_particles:
            raise BudgetExceeded("max_particles", budget.max_particles)
        if depth > budget.max_generations:
            raise BudgetExceeded("max_generations", budget.max_generations)
        max_depth = depth

        u = uniforms_from_keys(f_key[:, None], counters[None, :])
        tau_clock = -np.log1p(-u[:, 0]) / beta

        etas = np.empty((m, d))
        hi_side = np.empty((m, d), bool)
        for j, iv in enumerate(rect.intervals):
            e, hm = exit_samples_from_uniforms(
                u[:, 1 + 2 * j], u[:, 2 + 2 * j], f_birth[:, j], iv, acc
            )
            etas[:, j] = e
            hi_side[:, j] = hm
        imin = np.argmin(etas, axis=1)
        eta = etas[np.arange(m), imin]
        exited = eta <= tau_clock
        t_cond = np.where(exited, eta, tau_clock)

        pos = np.empty((m, d))
        for j, iv in enumerate(rect.intervals):
            need = ~(exited & (imin == j))
            if need.any():
                pos[need, j] = position_samples_from_uniforms(
                    u[need, 1 + 2 * d + j], t_cond[need], f_birth[need, j], iv, acc
                )
        rows = np.flatnonzero(exited)
        if rows.size:
            jj = imin[rows]
            pos[rows, jj] = np.where(hi_side[rows, jj], highs[jj], lows[jj])

        if depth == 0:
            root_pos[f_tree] = pos
            root_dt[f_tree] = t_cond
            root_exited[f_tree] = exited

        factor = np.empty(m)
        if rows.size:
            factor[rows] = spec.h(pos[rows])
        interior = np.flatnonzero(~exited)
        term_idx = np.searchsorted(cum_p, u[:, 3 * d + 1], side="right")
        term_idx = np.minimum(term_idx, len(cum_p) - 1)

        child_parent = []
        child_marks = []
        child_slot = []
        for t_i, term in enumerate(spec.terms):
            rows_t = interior[term_idx[interior] == t_i]
            if rows_t.size == 0:
                continue
            factor[rows_t] = term.c(pos[rows_t]) / term.p
            k = term.l.total
            if k:
                child_parent.append(np.repeat(rows_t, k))
                child_marks.append(np.tile(marks_per_term[t_i], rows_t.size))
                child_slot.append(np.tile(np.arange(k, dtype=np.uint64), rows_t.size))

        marked = np.flatnonzero(f_mark != 0)
        if marked.size:
            w = gradient_weight_1d(beta, iv0, f_birth[marked, 0], pos[marked, 0])
            for mk in np.unique(f_mark[marked]):
                sel = f_mark[marked] == mk
                rows_m = marked[sel]
                factor[rows_m] *= spec.b[mk - 1](f_birth[rows_m]) * w[sel]

        np.multiply.at(psi, f_tree, factor)

        if child_parent:
            parent = np.concatenate(child_parent)
            f_tree = f_tree[parent]
            f_key = child_keys(f_key[parent], np.concatenate(child_slot))
            f_birth = pos[parent]
            f_mark = np.concatenate(child_marks)
        else:
            f_tree = np.empty(0, dtype=int)
        depth += 1

    return BatchTrees(psi=psi, particles=sizes, root_pos=root_pos,
                      root_dt=root_dt, root_exited=root_exited,
                      max_depth=max_depth)
