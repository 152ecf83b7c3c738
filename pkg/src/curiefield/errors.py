"""Exception types raised by the library."""


class CurieFieldError(Exception):
    """Base class for all library errors."""


class DomainError(CurieFieldError, ValueError):
    """An argument lies outside the domain of the operation."""


class QuadratureError(CurieFieldError, RuntimeError):
    """Adaptive quadrature did not converge within its node budget.

    ``estimates`` holds the last two estimates produced before giving up
    (lower-order rule first).
    """

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class ReconstructionGapError(CurieFieldError, ArithmeticError):
    """A contour reconstruction is too far from the integer lattice to round."""

    def __init__(self, message, value=None, gap=None):
        super().__init__(message)
        self.value = value
        self.gap = gap


class FactorisationError(CurieFieldError, ArithmeticError):
    """A Gram matrix could not be factorised even with the maximal jitter."""


class SupportMismatchError(CurieFieldError, ValueError):
    """Two pmfs are defined on different supports."""


class EnumerationSizeError(CurieFieldError, ValueError):
    """Exact enumeration requested above the configured size cap."""


class TuningError(CurieFieldError, RuntimeError):
    """An MCMC sampler ended adaptation with an unusable acceptance rate."""


class RejectionCapError(CurieFieldError, RuntimeError):
    """A rejection sampler exceeded its per-draw attempt cap."""
