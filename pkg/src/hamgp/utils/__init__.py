"""Utility modules for hamgp."""

from hamgp.utils.exceptions import (
    ArtifactError,
    ChainAbortedError,
    ConfigurationError,
    DegenerateSweepError,
    HamGPError,
    NumericalError,
    ValidationError,
)
from hamgp.utils.logging import configure_logging

__all__ = [
    "HamGPError",
    "ConfigurationError",
    "ValidationError",
    "NumericalError",
    "DegenerateSweepError",
    "ChainAbortedError",
    "ArtifactError",
    "configure_logging",
]
