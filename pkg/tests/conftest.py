import numpy as np
import pytest

from branchpde.problem import MultiIndex, NonlinearityTerm, ParticleBudget, ProblemSpec
from branchpde.rect import cube
from branchpde.registry import Constant, get


@pytest.fixture(scope="session")
def ex1_spec():
    """u'' - u + u^3 = 0 reformulated at beta=1, p1=p3=1/2, r=0.3."""
    return ProblemSpec(
        beta=1.0,
        rect=cube(1, 0.3),
        terms=(
            NonlinearityTerm(MultiIndex((1,)), Constant(0.5), 0.5),
            NonlinearityTerm(MultiIndex((3,)), Constant(0.5), 0.5),
        ),
        h=get("cosh_sech"),
    )


def pure_death_spec(rect, beta, h=None, c_value=0.0):
    """Single term l=0: every interior branching kills the tree (c/p factor)."""
    return ProblemSpec(
        beta=beta,
        rect=rect,
        terms=(NonlinearityTerm(MultiIndex((0,)), Constant(c_value), 1.0),),
        h=h if h is not None else get("one"),
    )


def linear_spec(r, beta=1.0, h=None):
    """No interior regeneration: E[psi] equals the linear functional
    E[e^{-beta eta} h(W_eta)] with closed form phi."""
    return pure_death_spec(cube(1, r), beta, h=h, c_value=0.0)
