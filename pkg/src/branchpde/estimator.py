"""Monte Carlo aggregation of branching-tree samples.

Means, standard deviations and 99% confidence intervals for the solution
value u(x) = E[psi] and, in one dimension, for the derivative
u'(x) = E[psi * W(x, root arrival)].  Samples stream through a one-pass
(Welford-style) moment accumulator; work is split into fixed-size blocks of
trees whose statistics merge by the parallel moment-combination rule in
block order, so the result is bit-identical for any worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .branching import gradient_weight_1d, simulate_trees_batch
from .errors import GradientUnsupported, NonFinite
from .kernels import DEFAULT_ACCURACY, KernelAccuracy
from .problem import ProblemSpec
from .rng import Stream, child_keys

__all__ = ["EstimatorResult", "estimate_value", "estimate_gradient_1d", "Z99"]

Z99 = 2.576  # normal quantile used for the 99% intervals
DEFAULT_BLOCK = 1 << 14


@dataclass(frozen=True)
class EstimatorResult:
    mean: float
    std: float
    ci99: tuple[float, float]
    n: int
    elapsed: float
    diagnostics: dict

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci99[1] - self.ci99[0])

    def std_over_mean(self) -> float:
        """Relative dispersion; NaN when the mean is numerically zero."""
        if abs(self.mean) < 1e-12:
            return float("nan")
        return self.std / abs(self.mean)


@dataclass
class _Moments:
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def merge(self, n_b: int, mean_b: float, m2_b: float):
        if n_b == 0:
            return
        n_new = self.n + n_b
        delta = mean_b - self.mean
        self.mean += delta * (n_b / n_new)
        self.m2 += m2_b + delta * delta * (self.n * n_b / n_new)
        self.n = n_new

    def std(self) -> float:
        if self.n < 2:
            return 0.0
        return float(np.sqrt(self.m2 / (self.n - 1)))


def _block_keys(seed: int, start: int, stop: int) -> np.ndarray:
    base = Stream.from_seed(seed)
    return child_keys(np.uint64(base.key), np.arange(start, stop, dtype=np.uint64))


def _run_block(args):
    spec, x, seed, start, stop, acc, gradient = args
    keys = _block_keys(seed, start, stop)
    batch = simulate_trees_batch(x, spec, keys, acc)
    samples = batch.psi
    if gradient:
        iv = spec.rect.intervals[0]
        samples = samples * gradient_weight_1d(
            spec.beta, iv, float(np.asarray(x, float)[0]), batch.root_pos[:, 0]
        )
    if not np.isfinite(samples).all():
        raise NonFinite(f"{(~np.isfinite(samples)).sum()} non-finite samples in block {start}")
    mean_b = float(samples.mean())
    m2_b = float(((samples - mean_b) ** 2).sum())
    return (
        len(samples),
        mean_b,
        m2_b,
        int(batch.particles.sum()),
        int(batch.particles.max()),
    )


def _estimate(spec, x, n, seed, gradient, threads, block_size, acc):
    if n < 2:
        raise ValueError("need at least 2 samples")
    x = np.asarray(x, float)
    if x.shape != (spec.rect.dim,):
        raise ValueError(f"x has shape {x.shape}, expected ({spec.rect.dim},)")
    if gradient and spec.rect.dim != 1:
        raise GradientUnsupported("exact gradient weights exist only for d = 1")

    t0 = time.perf_counter()
    blocks = [(s, min(s + block_size, n)) for s in range(0, n, block_size)]
    jobs = [(spec, x, seed, s, e, acc, gradient) for s, e in blocks]

    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_block, jobs, chunksize=1))
    else:
        results = [_run_block(j) for j in jobs]

    mom = _Moments()
    total_particles = 0
    max_tree = 0
    for n_b, mean_b, m2_b, particles_b, max_b in results:
        mom.merge(n_b, mean_b, m2_b)
        total_particles += particles_b
        max_tree = max(max_tree, max_b)

    std = mom.std()
    half = Z99 * std / np.sqrt(n)
    elapsed = time.perf_counter() - t0
    return EstimatorResult(
        mean=mom.mean,
        std=std,
        ci99=(mom.mean - half, mom.mean + half),
        n=n,
        elapsed=elapsed,
        diagnostics={
            "mean_tree_size": total_particles / n,
            "max_tree_size": max_tree,
            "budget_hits": 0,  # budget overruns abort the run instead
        },
    )


def estimate_value(spec: ProblemSpec, x, n: int, seed: int, *, threads: int = 1,
                   block_size: int = DEFAULT_BLOCK,
                   acc: KernelAccuracy = DEFAULT_ACCURACY) -> EstimatorResult:
    """Estimate u(x) from n independent branching trees."""
    return _estimate(spec, x, n, seed, False, threads, block_size, acc)


def estimate_gradient_1d(spec: ProblemSpec, x, n: int, seed: int, *, threads: int = 1,
                         block_size: int = DEFAULT_BLOCK,
                         acc: KernelAccuracy = DEFAULT_ACCURACY) -> EstimatorResult:
    """Estimate u'(x) in 1D: each tree contributes psi * W(x, root arrival).

    Mark weights of descendant particles are already inside psi; the root
    weight alone converts the value estimator into a derivative estimator.
    """
    return _estimate(spec, x, n, seed, True, threads, block_size, acc)
