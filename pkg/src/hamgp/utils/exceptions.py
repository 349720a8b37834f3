"""Custom exceptions for hamgp."""

from typing import Optional


class HamGPError(Exception):
    """Base exception for all hamgp errors."""

    pass


class ConfigurationError(HamGPError):
    """Raised when a configuration is invalid or inconsistent."""

    pass


class ValidationError(HamGPError, ValueError):
    """Raised when an argument has the wrong shape or an invalid value."""

    pass


class NumericalError(HamGPError):
    """Raised when a matrix factorization or density evaluation fails."""

    def __init__(self, message: str, condition_number: Optional[float] = None):
        if condition_number is not None:
            message = f"{message} (condition number {condition_number:.3e})"
        super().__init__(message)
        self.condition_number = condition_number


class DegenerateSweepError(NumericalError):
    """Raised when every particle weight of a CSMC sweep vanishes."""

    def __init__(self, step: int):
        super().__init__(f"All particle weights numerically zero at step {step}")
        self.step = step


class ChainAbortedError(HamGPError):
    """Raised when a particle Gibbs run cannot continue."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"Iteration {iteration}: {message}")
        self.iteration = iteration


class ArtifactError(HamGPError):
    """Raised when a chain or report artifact is unusable."""

    pass
