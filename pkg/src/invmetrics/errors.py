"""Exception types raised by the numerical routines."""


class InvariantMetricsError(Exception):
    """Base class for every error raised by this package."""


class DegenerateGradient(InvariantMetricsError):
    pass


class NoConvergence(InvariantMetricsError):
    pass


class PoleHit(InvariantMetricsError):
    pass


class LiftFailure(InvariantMetricsError):
    pass


class Infeasible(InvariantMetricsError):
    """No feasible analytic disc was found within the optimisation budget."""


class DegeneratePair(InvariantMetricsError):
    pass


class NoRoot(InvariantMetricsError):
    pass


class MultipleRoots(InvariantMetricsError):
    pass


class NotStronglyConvexAt(InvariantMetricsError):
    pass


class BudgetExhausted(InvariantMetricsError):
    pass


class NoCauchyTrend(InvariantMetricsError):
    def __init__(self, message, gaps=()):
        super().__init__(message)
        self.gaps = list(gaps)


class UnsupportedDomain(InvariantMetricsError, ValueError):
    """Operation is not defined for this kind of domain (e.g. non-C^2 models)."""


class NotBoundaryAttached(InvariantMetricsError):
    """The boundary trace of a disc does not lie on the boundary."""
