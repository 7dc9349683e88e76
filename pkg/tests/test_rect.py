import math

import numpy as np
import pytest
from scipy import stats

from branchpde.errors import DegenerateStart, KernelDomainError
from branchpde.branching import simulate_trees_batch
from branchpde.estimator import _block_keys
from branchpde.kernels import Interval, exit_laplace, exit_time_survival
from branchpde.rect import Rectangle, cube, sample_arrival
from branchpde.rng import Stream
from conftest import pure_death_spec


def batch_root_arrivals(spec, x, n, seed):
    """Root arrivals of n pure-death trees: the batch twin of sample_arrival."""
    batch = simulate_trees_batch(np.asarray(x, float), spec, _block_keys(seed, 0, n))
    return batch


class TestRectangle:
    def test_cube(self):
        r = cube(3, 0.5)
        assert r.dim == 3 and r.is_cube()
        assert r.contains(np.zeros(3)) and not r.contains(np.array([0.5, 0, 0]))

    def test_non_cube(self):
        r = Rectangle((Interval(-1, 1), Interval(-2, 2)))
        assert not r.is_cube()

    def test_validation(self):
        with pytest.raises(KernelDomainError):
            Rectangle(())

    def test_boundary_distance(self):
        r = Rectangle((Interval(0, 1), Interval(0, 4)))
        assert r.boundary_distance(np.array([0.3, 2.0])) == pytest.approx(0.3)


class TestSampleArrival:
    def test_degenerate_start(self):
        st = Stream.from_seed(0)
        with pytest.raises(DegenerateStart):
            sample_arrival(np.array([1.0]), cube(1, 1.0), 1.0, st)

    def test_boundary_exactness_scalar(self):
        rect = Rectangle((Interval(-1.0, 1.0), Interval(-0.5, 2.0)))
        st = Stream.from_seed(1)
        exits = 0
        for _ in range(400):
            arr = sample_arrival(np.array([0.2, 0.7]), rect, 1.0, st)
            on_face = [
                float(arr.pos[j]) in (iv.lo, iv.hi) for j, iv in enumerate(rect.intervals)
            ]
            if arr.exited:
                exits += 1
                assert sum(on_face) == 1
            else:
                assert sum(on_face) == 0
                assert rect.contains(arr.pos)
        assert 0 < exits < 400

    def test_exit_probability_matches_laplace(self):
        # P(exited) = E[e^{-beta eta}]; 1e6 draws via the batch twin
        spec = pure_death_spec(cube(1, 1.0), beta=1.0)
        batch = batch_root_arrivals(spec, [0.0], 10 ** 6, seed=3)
        p = batch.root_exited.mean()
        want = exit_laplace(1.0, 0.0, Interval(-1.0, 1.0))
        se = math.sqrt(want * (1 - want) / 10 ** 6)
        assert abs(p - want) < 3 * se

    def test_square_face_symmetry(self):
        # from the center of a square, exits spread uniformly over 4 faces
        spec = pure_death_spec(cube(2, 0.7), beta=1.0)
        batch = batch_root_arrivals(spec, [0.0, 0.0], 10 ** 6, seed=4)
        pos = batch.root_pos[batch.root_exited]
        face = np.full(len(pos), -1)
        face[pos[:, 0] == -0.7] = 0
        face[pos[:, 0] == 0.7] = 1
        face[pos[:, 1] == -0.7] = 2
        face[pos[:, 1] == 0.7] = 3
        assert (face >= 0).all()
        counts = np.bincount(face, minlength=4)
        chi2, p_value = stats.chisquare(counts)
        assert p_value > 0.001

    def test_product_survival_law(self):
        # P(eta > t) = prod_j P(eta_j > t) at t = 0.1, 3 MC standard errors.
        # A negligible clock rate makes every arrival an exit with dt = eta.
        t = 0.1
        rect = Rectangle((Interval(-0.4, 0.4), Interval(-0.3, 0.5)))
        x = np.array([0.1, 0.2])
        p_exact = 1.0
        for j, iv in enumerate(rect.intervals):
            p_exact *= float(exit_time_survival(t, float(x[j]), iv))
        n = 300_000
        batch = batch_root_arrivals(pure_death_spec(rect, beta=1e-9), x, n, seed=6)
        assert batch.root_exited.all()
        p_emp = (batch.root_dt > t).mean()
        se = math.sqrt(p_exact * (1 - p_exact) / n)
        assert abs(p_emp - p_exact) < 3 * se

    def test_exchangeability(self):
        # permuting coordinates of x and the rectangle permutes the law
        rect = Rectangle((Interval(-1.0, 1.0), Interval(-2.0, 2.0)))
        rect_p = Rectangle((Interval(-2.0, 2.0), Interval(-1.0, 1.0)))
        x = [0.3, 0.5]
        n = 200_000
        a = batch_root_arrivals(pure_death_spec(rect, 1.0), x, n, seed=7)
        b = batch_root_arrivals(pure_death_spec(rect_p, 1.0), x[::-1], n, seed=8)
        pa, pb = a.root_exited.mean(), b.root_exited.mean()
        se = math.sqrt(2 * pa * (1 - pa) / n)
        assert abs(pa - pb) < 3 * se
        ma = a.root_pos[:, 0].mean()
        mb = b.root_pos[:, 1].mean()
        sd = a.root_pos[:, 0].std(ddof=1) * math.sqrt(2.0 / n)
        assert abs(ma - mb) < 3 * sd

    def test_interior_arrival_strictly_inside(self):
        rect = cube(2, 0.5)
        st = Stream.from_seed(9)
        seen_interior = False
        for _ in range(300):
            arr = sample_arrival(np.array([0.0, 0.0]), rect, 5.0, st)
            if not arr.exited:
                seen_interior = True
                assert rect.contains(arr.pos, strict=True)
        assert seen_interior
