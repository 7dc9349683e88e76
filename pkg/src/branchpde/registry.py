"""Named coefficient, boundary, and certificate functions.

The CLI and config files refer to functions by name; the library accepts any
callable.  Registered functions evaluate on position arrays of shape
``(..., d)`` (so the batch engine can call them on whole particle frontiers),
expose an exact supremum norm over a closed rectangle where the structure of
the function makes one available, and optionally carry a second derivative
(one-dimensional functions only) for supersolution residual checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .rect import Rectangle

__all__ = [
    "RegistryFunction",
    "Constant",
    "register",
    "get",
    "resolve",
    "names",
    "grid_sup_norm",
]


@dataclass(frozen=True)
class RegistryFunction:
    """A named function of position.

    fn        value on (..., d) arrays -> (...)
    sup_norm  exact sup of |fn| over a closed Rectangle, or None to fall back
              to a refined grid search
    d1, d2    first/second derivative for d=1 functions (used by gradient
              checks and supersolution residuals)
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    sup_norm: Optional[Callable[[Rectangle], float]] = None
    d1: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d2: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.fn(np.asarray(x, float))

    def sup_on(self, rect: Rectangle) -> float:
        if self.sup_norm is not None:
            return float(self.sup_norm(rect))
        return grid_sup_norm(self.fn, rect)

    def __reduce__(self):
        # registered functions pickle by name so problem specs cross
        # process boundaries (worker pools) regardless of how the
        # callables were defined
        return (get, (self.name,))


class Constant:
    """A constant coefficient, picklable and registry-compatible."""

    def __init__(self, value: float):
        self.value = float(value)
        self.name = repr(self.value)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        return np.full(x.shape[:-1], self.value)

    def sup_on(self, rect: Rectangle) -> float:
        return abs(self.value)

    def __repr__(self) -> str:
        return f"Constant({self.value})"

    def __eq__(self, other):
        return isinstance(other, Constant) and other.value == self.value

    def __hash__(self):
        return hash(("Constant", self.value))


def grid_sup_norm(fn, rect: Rectangle, n0: int = 33, tol: float = 1e-6,
                  max_rounds: int = 12) -> float:
    """Sup of |fn| on a closed rectangle by grid refinement.

    Doubles the per-axis resolution until the estimate moves by less than
    tol (relative); adequate for the smooth coefficients used here.
    """
    prev = -np.inf
    n = n0
    for _ in range(max_rounds):
        axes = [np.linspace(iv.lo, iv.hi, n) for iv in rect.intervals]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        cur = float(np.abs(fn(mesh)).max())
        if prev > -np.inf and abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
        n = 2 * n - 1
    return prev


_REGISTRY: dict[str, RegistryFunction] = {}


def register(entry: RegistryFunction) -> RegistryFunction:
    _REGISTRY[entry.name] = entry
    return entry


def get(name: str) -> RegistryFunction:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown registry function {name!r}; known: {sorted(_REGISTRY)}"
        ) from None


def resolve(spec) -> "RegistryFunction | Constant":
    """Turn a config value (name or number) into a callable coefficient."""
    if isinstance(spec, (RegistryFunction, Constant)):
        return spec
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    if isinstance(spec, str):
        try:
            return Constant(float(spec))
        except ValueError:
            return get(spec)
    raise TypeError(f"cannot resolve coefficient from {spec!r}")


def names() -> list[str]:
    return sorted(_REGISTRY)


# ---------------------------------------------------------------------------
# built-in functions
# ---------------------------------------------------------------------------


def _nearest_to_zero(iv) -> float:
    if iv.lo <= 0.0 <= iv.hi:
        return 0.0
    return iv.lo if abs(iv.lo) < abs(iv.hi) else abs(iv.hi)


def _farthest_from_zero(iv) -> float:
    return max(abs(iv.lo), abs(iv.hi))


_SQRT2 = math.sqrt(2.0)

register(RegistryFunction(
    name="cosh_sech",
    fn=lambda x: _SQRT2 / np.cosh(x[..., 0]),
    # even, decreasing in |x|: max at the admissible point nearest zero
    sup_norm=lambda rect: _SQRT2 / math.cosh(_nearest_to_zero(rect.intervals[0])),
    d1=lambda x: -_SQRT2 * np.tanh(x[..., 0]) / np.cosh(x[..., 0]),
    d2=lambda x: _SQRT2 / np.cosh(x[..., 0]) * (1.0 - 2.0 / np.cosh(x[..., 0]) ** 2),
))

register(RegistryFunction(
    name="one_plus_two_tansq",
    fn=lambda x: 1.0 + 2.0 * np.tan(x[..., 0]) ** 2,
    # even, increasing in |x| (for |x| < pi/2)
    sup_norm=lambda rect: 1.0 + 2.0 * math.tan(_farthest_from_zero(rect.intervals[0])) ** 2,
    d1=lambda x: 4.0 * np.tan(x[..., 0]) / np.cos(x[..., 0]) ** 2,
    d2=lambda x: (4.0 / np.cos(x[..., 0]) ** 2)
    * (1.0 / np.cos(x[..., 0]) ** 2 + 2.0 * np.tan(x[..., 0]) ** 2),
))


def _tan_sum_sup(rect: Rectangle) -> float:
    s_hi = float(np.sum(rect.highs))
    s_lo = float(np.sum(rect.lows))
    if not (-math.pi / 2 < s_lo and s_hi < math.pi / 2):
        raise ValueError("tan_sum unbounded: sum of coordinates reaches pi/2")
    return max(abs(math.tan(s_hi)), abs(math.tan(s_lo)))


register(RegistryFunction(
    name="tan_sum",
    fn=lambda x: np.tan(np.sum(x, axis=-1)),
    sup_norm=_tan_sum_sup,
    d1=lambda x: 1.0 / np.cos(np.sum(x, axis=-1)) ** 2,
    d2=lambda x: 2.0 * np.tan(np.sum(x, axis=-1)) / np.cos(np.sum(x, axis=-1)) ** 2,
))

_SQRT6 = math.sqrt(6.0)
_SQRT7 = math.sqrt(7.0)


def _sqrt7_cos_sup(rect: Rectangle) -> float:
    iv = rect.intervals[0]
    if _SQRT6 * max(abs(iv.lo), abs(iv.hi)) > math.pi:
        raise ValueError("sup of sqrt7_cos_sqrt6 outside its monotone range")
    return _SQRT7 * math.cos(_SQRT6 * _nearest_to_zero(iv))


register(RegistryFunction(
    name="sqrt7_cos_sqrt6",
    fn=lambda x: _SQRT7 * np.cos(_SQRT6 * x[..., 0]),
    sup_norm=_sqrt7_cos_sup,
    d1=lambda x: -_SQRT7 * _SQRT6 * np.sin(_SQRT6 * x[..., 0]),
    d2=lambda x: -6.0 * _SQRT7 * np.cos(_SQRT6 * x[..., 0]),
))

register(RegistryFunction(
    name="one",
    fn=lambda x: np.ones(np.asarray(x).shape[:-1]),
    sup_norm=lambda rect: 1.0,
    d1=lambda x: np.zeros(np.asarray(x).shape[:-1]),
    d2=lambda x: np.zeros(np.asarray(x).shape[:-1]),
))


def _smooth_bump(x):
    # vanishes linearly at +-1; used as a gradient direction field on (-1,1)
    return 1.0 - x[..., 0] ** 2


register(RegistryFunction(
    name="one_minus_xsq",
    fn=_smooth_bump,
    sup_norm=lambda rect: grid_sup_norm(_smooth_bump, rect),
    d1=lambda x: -2.0 * x[..., 0],
    d2=lambda x: np.full(np.asarray(x).shape[:-1], -2.0),
))
