"""Exception types shared across the package."""

from __future__ import annotations


class PinchflowError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(PinchflowError):
    """Invalid configuration: bad key, bad value, or violated constraint."""


class ContractError(PinchflowError):
    """A documented precondition of an operation was violated."""


class FitError(PinchflowError):
    """A regression could not be performed (too few usable samples)."""


class HypothesisError(PinchflowError):
    """A checker was asked to run outside its hypothesis range."""


class IntegrationError(PinchflowError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best available estimate so callers can decide whether to
    proceed anyway.
    """

    def __init__(self, message: str, best_estimate: float, error_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate
