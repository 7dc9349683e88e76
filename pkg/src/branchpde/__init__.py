"""Monte Carlo solver for semi-linear elliptic Dirichlet problems on
rectangles via marked branching Brownian motion with absorption, plus the
analysis toolkit that certifies when the probabilistic representation holds.
"""

__version__ = "0.1.0"

from .analysis import (
    ThresholdReport,
    admissible_radius,
    certify,
    compute_c0,
    compute_delta,
    extinction_margin,
    gamma_threshold,
    supersolution_residual,
)
from .branching import sample_offspring, simulate_psi, simulate_tree, tree_stream
from .errors import BranchPDEError, BudgetExceeded
from .estimator import EstimatorResult, estimate_gradient_1d, estimate_value
from .kernels import (
    Interval,
    KernelAccuracy,
    exit_laplace,
    exit_time_cdf,
    exit_time_survival,
    sample_exit,
    sample_position_given_survival,
)
from .problem import MultiIndex, NonlinearityTerm, ParticleBudget, ProblemSpec
from .rect import Arrival, Rectangle, cube, sample_arrival
from .rng import Stream

__all__ = [
    "__version__",
    "Arrival",
    "BranchPDEError",
    "BudgetExceeded",
    "EstimatorResult",
    "Interval",
    "KernelAccuracy",
    "MultiIndex",
    "NonlinearityTerm",
    "ParticleBudget",
    "ProblemSpec",
    "Rectangle",
    "Stream",
    "ThresholdReport",
    "admissible_radius",
    "certify",
    "compute_c0",
    "compute_delta",
    "cube",
    "estimate_gradient_1d",
    "estimate_value",
    "exit_laplace",
    "exit_time_cdf",
    "exit_time_survival",
    "extinction_margin",
    "gamma_threshold",
    "sample_arrival",
    "sample_exit",
    "sample_offspring",
    "sample_position_given_survival",
    "simulate_psi",
    "simulate_tree",
    "supersolution_residual",
    "tree_stream",
]
