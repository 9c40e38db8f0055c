"""Exception types raised by the kapitsa package."""

from __future__ import annotations


class KapitsaError(Exception):
    """Base class for all package errors."""


class DomainError(KapitsaError, ValueError):
    """An argument lies outside the domain of the operation."""


class DivergentIntegralError(DomainError):
    """The requested integral does not converge for the given exponents."""


class NumericalError(KapitsaError, RuntimeError):
    """Base class for failures of a numerical procedure (exit code 3 in the CLI)."""


class ResidualSingularityError(NumericalError):
    """A spectral amplitude grows faster than allowed as k -> 0."""

    def __init__(self, message: str, exponent: float):
        super().__init__(message)
        self.exponent = exponent


class TruncationError(NumericalError):
    """The k1-quadrature tail is too large to be neglected."""

    def __init__(self, message: str, tail_bound: float):
        super().__init__(message)
        self.tail_bound = tail_bound


class SingularOrderError(NumericalError):
    """The k -> 0 regularity condition cannot be solved for the series coefficient."""


class ConvergenceError(NumericalError):
    """An iterative solver failed to converge."""

    def __init__(self, message: str, history: list[float] | None = None):
        super().__init__(message)
        self.history = list(history or [])


class GridError(NumericalError):
    """The discretisation is too coarse for the requested diagnostic."""

    def __init__(self, message: str, measured: float | None = None):
        super().__init__(message)
        self.measured = measured
