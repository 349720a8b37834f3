"""Hamiltonian GP model parameters."""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from hamgp.utils.exceptions import ValidationError


@dataclass(frozen=True)
class GPParams:
    """Basis weights a and gradient-observation noise variance sigma^2."""

    weights: np.ndarray
    noise_variance: float

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float, ndmin=1)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        self.validate()

    def validate(self) -> bool:
        if self.weights.ndim != 1:
            raise ValidationError("Weights must be a vector")
        if not (np.isfinite(self.noise_variance) and self.noise_variance > 0):
            raise ValidationError(f"Noise variance must be positive, got {self.noise_variance}")
        return True

    @property
    def M(self) -> int:
        return self.weights.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        return {"weights": self.weights.tolist(), "noise_variance": self.noise_variance}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GPParams":
        return cls(np.asarray(data["weights"], dtype=float), float(data["noise_variance"]))
