"""Exception types raised across the library."""


class BranchPDEError(Exception):
    """Base class for all library errors."""


class KernelDomainError(BranchPDEError, ValueError):
    """Evaluation point outside the (closure of the) interval or rectangle."""


class ConditioningTooRare(BranchPDEError):
    """Survival probability below the series floor; the conditional law is
    numerically meaningless at the requested horizon."""


class DegenerateStart(BranchPDEError, ValueError):
    """Arrival sampling requested from a boundary (or exterior) point."""


class BudgetExceeded(BranchPDEError):
    """A branching tree exceeded its particle or generation budget.

    Signals parameters outside the validated regime; simulations are never
    silently truncated.
    """

    def __init__(self, kind: str, limit: int):
        self.kind = kind
        self.limit = limit
        super().__init__(f"branching budget exceeded: {kind} > {limit}")


class NonFinite(BranchPDEError):
    """A Monte Carlo sample evaluated to NaN or infinity."""


class GradientUnsupported(BranchPDEError):
    """Exact gradient weights are only available in one dimension."""


class Supercritical(BranchPDEError):
    """The dominating offspring process has mean >= 1; no finite
    generating-function threshold exists."""


class UnsupportedDomain(BranchPDEError, ValueError):
    """Operation requires a cubic domain (-r, r)^d."""


class NeverAdmissible(BranchPDEError):
    """Admissibility violated on the whole search range."""


class AlwaysAdmissible(BranchPDEError):
    """Admissibility holds on the whole search range."""


class NewtonDiverged(BranchPDEError):
    """Damped Newton iteration failed to converge."""


class ClockUnderResolved(BranchPDEError):
    """The weight clock integral overshot its unit target by more than 10%
    in a single step; decrease the step size."""


class ConfigError(BranchPDEError, ValueError):
    """Invalid run configuration file."""
