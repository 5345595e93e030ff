"""Exception types shared across the package."""


class RandpolyError(Exception):
    """Base class for package errors."""


class ConfigError(RandpolyError):
    """Invalid configuration: bad keys, values, or inconsistent options."""


class Unsupported(RandpolyError):
    """Operation not implemented for this body kind or dimension."""


class Unbounded(RandpolyError):
    """Halfspace intersection is unbounded where a bounded body is required."""


class OriginOutside(RandpolyError):
    """Operation requires the origin in the interior of the body."""


class NotOnBoundary(RandpolyError):
    """Query point is off the body boundary beyond tolerance."""


class DomainError(RandpolyError):
    """Input data outside the mathematical domain of an operation."""


class NumericalError(RandpolyError):
    """Non-finite or degenerate value encountered during computation."""


class EnvelopeTooLoose(RandpolyError):
    """Rejection sampler acceptance rate collapsed; envelope unusable."""


class HypothesisError(RandpolyError):
    """Asymptotic-formula hypothesis violated for the given parameters."""
