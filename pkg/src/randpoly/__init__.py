"""randpoly: random polytopes inscribed in and circumscribed about convex
bodies, with the quadrature and functional machinery to verify their limit
behavior numerically."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    EnvelopeTooLoose,
    HypothesisError,
    NotOnBoundary,
    NumericalError,
    OriginOutside,
    RandpolyError,
    Unbounded,
    Unsupported,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DomainError",
    "EnvelopeTooLoose",
    "HypothesisError",
    "NotOnBoundary",
    "NumericalError",
    "OriginOutside",
    "RandpolyError",
    "Unbounded",
    "Unsupported",
]
