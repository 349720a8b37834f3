"""Resampling schemes."""

from typing import Optional

import numpy as np

from hamgp.utils.exceptions import ValidationError

# Shift of the scaled cumulative weights so exact ties land in the upper cell.
_TIE_TOLERANCE = 1e-9


def systematic_resample(weights: np.ndarray, u: float, n: Optional[int] = None) -> np.ndarray:
    """Systematic resampling with a single uniform draw u in [0, 1).

    Returns ``n`` (default ``len(weights)``) 0-based ancestor indices whose
    expected counts are ``n * weights``.

    Raises:
        ValidationError: If weights are negative or do not sum to one
    """
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValidationError("Resampling weights must be finite and non-negative")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValidationError(f"Resampling weights must sum to one, got {weights.sum()!r}")
    if not 0.0 <= u < 1.0:
        raise ValidationError(f"Uniform draw must lie in [0, 1), got {u}")

    n = weights.shape[0] if n is None else n
    scaled = np.cumsum(weights) * n
    scaled[-1] = n
    positions = u + np.arange(n)
    indices = np.searchsorted(scaled - _TIE_TOLERANCE, positions, side="right")
    return np.minimum(indices, weights.shape[0] - 1)
