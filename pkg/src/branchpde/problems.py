"""Named benchmark problem families and report table definitions.

Three semi-linear Dirichlet problems with known exact solutions, each
parameterized by the half-width r of its centered cube domain:

* ``cosh_family``   (1/2) u'' + (1/2) u^3 + (1/2) u - u = 0,
                    u = sqrt(2)/cosh(x); branching law p_1 = p_3 = 1/2.
* ``tan_sq_family`` (1/2) u'' + 1/2 - (3/2) u^2 - u = 0,
                    u = 1 + 2 tan(x)^2; law p_0 = 1/4, p_2 = 3/4.
* ``tan_sum_family``(1/2) Lap u + d (-u^3 - u) = 0 on (-r, r)^d,
                    u = tan(sum x_i); pure trinary branching, beta = d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .problem import MultiIndex, NonlinearityTerm, ParticleBudget, ProblemSpec
from .rect import cube
from .registry import Constant, get

__all__ = [
    "cosh_family",
    "tan_sq_family",
    "tan_sum_family",
    "FAMILIES",
    "TableDef",
    "TABLES",
    "COSH_REGIME_BOUNDARY",
]

# For r >= arcosh(sqrt(2)) the branching representation of the cosh problem
# stays valid (extinct, bounded) but selects a solution different from
# sqrt(2)/cosh; reports flag the regime instead of erroring.
COSH_REGIME_BOUNDARY = math.acosh(math.sqrt(2.0))


def cosh_family(r: float, budget: Optional[ParticleBudget] = None) -> ProblemSpec:
    return ProblemSpec(
        beta=1.0,
        rect=cube(1, r),
        terms=(
            NonlinearityTerm(MultiIndex((1,)), Constant(0.5), 0.5),
            NonlinearityTerm(MultiIndex((3,)), Constant(0.5), 0.5),
        ),
        h=get("cosh_sech"),
        budget=budget or ParticleBudget(),
    )


def tan_sq_family(r: float, budget: Optional[ParticleBudget] = None) -> ProblemSpec:
    return ProblemSpec(
        beta=1.0,
        rect=cube(1, r),
        terms=(
            NonlinearityTerm(MultiIndex((0,)), Constant(0.5), 0.25),
            NonlinearityTerm(MultiIndex((2,)), Constant(-1.5), 0.75),
        ),
        h=get("one_plus_two_tansq"),
        budget=budget or ParticleBudget(),
    )


def tan_sum_family(d: int) -> Callable[[float], ProblemSpec]:
    def make(r: float, budget: Optional[ParticleBudget] = None) -> ProblemSpec:
        return ProblemSpec(
            beta=float(d),
            rect=cube(d, r),
            terms=(NonlinearityTerm(MultiIndex((3,)), Constant(-1.0), 1.0),),
            h=get("tan_sum"),
            budget=budget or ParticleBudget(),
        )

    return make


FAMILIES: dict[str, Callable[[float], ProblemSpec]] = {
    "cosh": cosh_family,
    "tan_sq": tan_sq_family,
    "tan_sum_2d": tan_sum_family(2),
    "tan_sum_4d": tan_sum_family(4),
}


@dataclass(frozen=True)
class TableDef:
    """One reproducible report table: rows of (half-width, evaluation point)."""

    name: str
    family: str
    rows: tuple[tuple[float, tuple[float, ...]], ...]
    n: int
    exact: Optional[str]  # registry name of the exact solution, if reported
    note: str = ""


TABLES: dict[str, TableDef] = {
    "example1": TableDef(
        name="example1", family="cosh", n=10 ** 6, exact="cosh_sech",
        rows=((0.3, (0.0,)), (0.3, (-0.2,))),
    ),
    "example1r": TableDef(
        name="example1r", family="cosh", n=10 ** 6, exact=None,
        rows=((0.4, (0.0,)), (0.5, (0.0,))),
    ),
    "example09": TableDef(
        name="example09", family="cosh", n=10 ** 6, exact=None,
        rows=((0.9, (0.0,)), (0.9, (-0.2,))),
        note=(
            "half-width beyond arcosh(sqrt(2)): representation valid but "
            "selects a different solution than sqrt(2)/cosh"
        ),
    ),
    "example2": TableDef(
        name="example2", family="tan_sq", n=10 ** 6, exact="one_plus_two_tansq",
        rows=((0.14, (0.0,)), (0.14, (-0.1,))),
    ),
    "example2_1": TableDef(
        name="example2_1", family="tan_sq", n=10 ** 6, exact="one_plus_two_tansq",
        rows=((0.3, (0.0,)), (0.3, (-0.1,))),
    ),
    "example2D": TableDef(
        name="example2D", family="tan_sum_2d", n=5 * 10 ** 5, exact="tan_sum",
        rows=(
            (0.48, (0.0, 0.0)),
            (0.48, (0.1, 0.0)),
            (0.48, (0.2, 0.1)),
            (0.48, (0.2, 0.2)),
        ),
    ),
    "example4D": TableDef(
        name="example4D", family="tan_sum_4d", n=5 * 10 ** 5, exact="tan_sum",
        rows=(
            (0.24, (0.0, 0.0, 0.0, 0.0)),
            (0.24, (0.1, 0.0, 0.0, 0.0)),
            (0.24, (0.1, 0.1, 0.0, 0.0)),
            (0.24, (0.1, 0.1, 0.1, 0.0)),
        ),
    ),
}
