"""Exception types shared across the package."""


class AlphariError(Exception):
    """Base class for every error raised by this package."""


class NonStochasticPrior(AlphariError):
    """A prior has negative entries or does not sum to one."""


class NonPositiveKappa(AlphariError):
    """The information cost scale kappa must be strictly positive."""


class NonPositiveAlpha(AlphariError):
    """The cost curvature alpha must be strictly positive."""


class DimensionMismatch(AlphariError):
    """Array shapes are inconsistent with each other or with the problem."""


class AlphaIsOne(AlphariError):
    """An operation defined only for alpha != 1 was called on the Shannon branch."""


class DualBoundViolation(AlphariError):
    """Dual variables violate their sign bounds badly enough to zero a kernel row."""


class NewtonDiverged(AlphariError):
    """The dual root-finder failed even after the bisection fallback."""


class MaxIterationsExceeded(AlphariError):
    """The alternating-minimization loop hit its iteration cap."""


class BoundarySupport(AlphariError):
    """A quantity that needs interior choice probabilities met a zero entry."""


class NonDifferentiablePoint(AlphariError):
    """Finite differencing detected a support change between its endpoints."""


class NotSymmetric(AlphariError):
    """A symmetric tracking structure was required but not present."""


class OutOfRange(AlphariError):
    """A scalar argument lies outside its documented domain."""


class GridTooCoarse(AlphariError):
    """A sampled frontier has gaps wider than the requested resolution."""


class WrongDimensions(AlphariError):
    """An oracle restricted to a fixed problem size got another size."""


class NotConverged(AlphariError):
    """An iterative oracle exhausted its step budget before its tolerance."""
