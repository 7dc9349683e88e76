import math

import numpy as np
import pytest

from branchpde.branching import (
    gradient_weight_1d,
    sample_offspring,
    simulate_psi,
    simulate_tree,
    simulate_trees_batch,
    tree_stream,
)
from branchpde.errors import BudgetExceeded
from branchpde.estimator import _block_keys
from branchpde.kernels import Interval
from branchpde.oracles import closed_phi
from branchpde.problem import MultiIndex, NonlinearityTerm, ParticleBudget, ProblemSpec
from branchpde.rect import cube
from branchpde.registry import Constant, get
from branchpde.rng import Stream
from conftest import linear_spec

SQRT2 = math.sqrt(2.0)


class TestSampleOffspring:
    def test_single_term(self):
        terms = (NonlinearityTerm(MultiIndex((2,)), Constant(1.0), 1.0),)
        st = Stream.from_seed(0)
        assert all(sample_offspring(terms, st).counts == (2,) for _ in range(100))

    def test_example1_law(self, ex1_spec):
        # p_1 = p_3 = 1/2 within 3 sigma over 1e6 draws
        st = Stream.from_seed(1)
        n = 10 ** 6
        ones = sum(sample_offspring(ex1_spec.terms, st).total == 1 for _ in range(n))
        se = math.sqrt(0.25 / n)
        assert abs(ones / n - 0.5) < 3 * se

    def test_mean_offspring_count(self):
        # {p_0 = 0.25, p_2 = 0.75}: mean total offspring 1.5
        terms = (
            NonlinearityTerm(MultiIndex((0,)), Constant(0.5), 0.25),
            NonlinearityTerm(MultiIndex((2,)), Constant(-1.5), 0.75),
        )
        st = Stream.from_seed(2)
        n = 10 ** 6
        tot = sum(sample_offspring(terms, st).total for _ in range(n))
        se = math.sqrt(0.75 * 0.25 * 4 / n)  # totals are 0 or 2
        assert abs(tot / n - 1.5) < 3 * se

    def test_marks_layout(self):
        l = MultiIndex((2, 1, 3))
        assert l.total == 6
        assert l.marks == (0, 0, 1, 2, 2, 2)


class TestSimulatePsi:
    def test_product_of_ones(self):
        # h == 1 and c_l/p_l == 1 make every realization exactly 1
        spec = ProblemSpec(
            beta=1.0,
            rect=cube(1, 0.4),
            terms=(
                NonlinearityTerm(MultiIndex((1,)), Constant(0.5), 0.5),
                NonlinearityTerm(MultiIndex((3,)), Constant(0.5), 0.5),
            ),
            h=get("one"),
        )
        for i in range(300):
            assert simulate_psi(np.zeros(1), spec, tree_stream(3, i)) == 1.0

    def test_linear_problem_mean(self):
        # c == 0: E[psi] = E[e^{-beta eta} h(W_eta)] = phi(x)
        spec = linear_spec(0.5, beta=1.0, h=get("cosh_sech"))
        n = 10 ** 5
        batch = simulate_trees_batch(np.array([0.1]), spec, _block_keys(4, 0, n))
        h = get("cosh_sech")
        phi, _ = closed_phi(0.1, 1.0, 0.5,
                            float(h(np.array([[-0.5]]))[0]), float(h(np.array([[0.5]]))[0]))
        se = batch.psi.std(ddof=1) / math.sqrt(n)
        assert abs(batch.psi.mean() - phi) < 3 * se

    def test_example1_mean(self, ex1_spec):
        n = 10 ** 5
        batch = simulate_trees_batch(np.zeros(1), ex1_spec, _block_keys(5, 0, n))
        se = batch.psi.std(ddof=1) / math.sqrt(n)
        assert abs(batch.psi.mean() - SQRT2) < 4 * se

    def test_determinism(self, ex1_spec):
        a = simulate_tree(np.zeros(1), ex1_spec, tree_stream(9, 7))
        b = simulate_tree(np.zeros(1), ex1_spec, tree_stream(9, 7))
        assert a.psi == b.psi
        assert a.particles == b.particles
        assert a.depth == b.depth

    def test_scalar_batch_agree(self, ex1_spec):
        n = 200
        batch = simulate_trees_batch(np.zeros(1), ex1_spec, _block_keys(11, 0, n))
        for i in range(n):
            ts = simulate_tree(np.zeros(1), ex1_spec, tree_stream(11, i))
            assert ts.particles == batch.particles[i]
            assert ts.root_exited == batch.root_exited[i]
            assert ts.psi == pytest.approx(batch.psi[i], rel=1e-9, abs=1e-12)

    def test_tree_size_tail_geometric(self):
        # subcritical dominating process: P(particles >= k) decays at least
        # geometrically; successive tail ratios stay bounded away from 1
        spec = ProblemSpec(
            beta=1.0,
            rect=cube(1, 0.5),
            terms=(
                NonlinearityTerm(MultiIndex((1,)), Constant(0.5), 0.5),
                NonlinearityTerm(MultiIndex((3,)), Constant(0.5), 0.5),
            ),
            h=get("one"),
        )
        n = 10 ** 5
        batch = simulate_trees_batch(np.zeros(1), spec, _block_keys(13, 0, n))
        sizes = batch.particles
        q = [(sizes >= k).mean() for k in (5, 15, 25)]
        assert q[0] > 0  # the regime does branch
        ratio1 = q[1] / q[0]
        ratio2 = q[2] / q[1] if q[1] > 0 else 0.0
        assert ratio1 < 0.8
        assert ratio2 < ratio1 + 0.1

    def test_budget_exceeded_particles(self):
        # supercritical regime: beta (3 - 1) >> lambda_1/2
        spec = ProblemSpec(
            beta=50.0,
            rect=cube(1, 1.0),
            terms=(NonlinearityTerm(MultiIndex((3,)), Constant(1.0), 1.0),),
            h=get("one"),
            budget=ParticleBudget(max_particles=500, max_generations=10_000),
        )
        with pytest.raises(BudgetExceeded) as exc:
            simulate_psi(np.zeros(1), spec, tree_stream(17, 0))
        assert exc.value.kind == "max_particles"
        with pytest.raises(BudgetExceeded):
            simulate_trees_batch(np.zeros(1), spec, _block_keys(17, 0, 64))

    def test_budget_exceeded_generations(self):
        # beta so large that the single-offspring chain essentially never
        # reaches the boundary before its third branching
        spec = ProblemSpec(
            beta=500.0,
            rect=cube(1, 1.0),
            terms=(NonlinearityTerm(MultiIndex((1,)), Constant(1.0), 1.0),),
            h=get("one"),
            budget=ParticleBudget(max_particles=10 ** 6, max_generations=2),
        )
        with pytest.raises(BudgetExceeded) as exc:
            simulate_psi(np.zeros(1), spec, tree_stream(19, 0))
        assert exc.value.kind == "max_generations"


class TestGradientWeight:
    def test_signs_and_values(self):
        iv = Interval(-0.3, 0.3)
        s = math.sqrt(2.0)
        w_up = gradient_weight_1d(1.0, iv, 0.1, 0.25)
        assert w_up == pytest.approx(s / math.tanh(s * 0.4))
        w_dn = gradient_weight_1d(1.0, iv, 0.1, -0.1)
        assert w_dn == pytest.approx(s / math.tanh(s * -0.2))
        assert w_up > 0 > w_dn

    def test_recentering(self):
        a = gradient_weight_1d(2.0, Interval(-0.5, 0.5), 0.2, 0.4)
        b = gradient_weight_1d(2.0, Interval(3.5, 4.5), 4.2, 4.4)
        assert a == pytest.approx(b, rel=1e-14)

    def test_marked_tree_runs(self):
        # smoke: gradient-marked offspring multiply in b * W factors
        spec = ProblemSpec(
            beta=1.0,
            rect=cube(1, 0.4),
            terms=(
                NonlinearityTerm(MultiIndex((0, 0)), Constant(0.4), 0.5),
                NonlinearityTerm(MultiIndex((0, 1)), Constant(0.4), 0.5),
            ),
            h=get("cosh_sech"),
            b=(get("one_minus_xsq"),),
        )
        vals = [simulate_psi(np.array([0.1]), spec, tree_stream(23, i)) for i in range(200)]
        assert all(np.isfinite(v) for v in vals)
        assert any(v != 0 for v in vals)
        # batch twin agrees
        batch = simulate_trees_batch(np.array([0.1]), spec, _block_keys(23, 0, 200))
        np.testing.assert_allclose(batch.psi, vals, rtol=1e-9, atol=1e-12)
