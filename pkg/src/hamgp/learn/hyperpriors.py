"""Independent Gaussian hyper-priors in declared coordinates."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping

import numpy as np

from hamgp.smc.densities import LOG_2PI
from hamgp.utils.exceptions import ConfigurationError


class Coordinate(str, Enum):
    """Coordinate in which a hyperparameter is sampled and given a Gaussian prior."""

    LOG = "log"
    LINEAR = "linear"

    def to_internal(self, value: float) -> float:
        if self is Coordinate.LOG:
            if not value > 0:
                raise ConfigurationError(f"Log-coordinate hyperparameter must be positive, got {value}")
            return float(np.log(value))
        return float(value)

    def to_value(self, internal: float) -> float:
        return float(np.exp(internal)) if self is Coordinate.LOG else float(internal)


@dataclass(frozen=True)
class GaussianHyperPrior:
    """N(mean, std^2) on the hyperparameter expressed in ``coordinate``."""

    mean: float
    std: float
    coordinate: Coordinate = Coordinate.LOG

    def __post_init__(self):
        object.__setattr__(self, "coordinate", Coordinate(self.coordinate))
        if not self.std > 0:
            raise ConfigurationError(f"Hyper-prior standard deviation must be positive, got {self.std}")

    def log_density(self, internal: float) -> float:
        z = (internal - self.mean) / self.std
        return float(-0.5 * (z * z + LOG_2PI) - np.log(self.std))

    def to_dict(self) -> Dict[str, Any]:
        return {"coordinate": self.coordinate.value, "mean": self.mean, "std": self.std}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GaussianHyperPrior":
        return cls(float(data["mean"]), float(data["std"]), Coordinate(data.get("coordinate", "log")))


@dataclass(frozen=True)
class HyperPrior:
    """Named collection of independent hyper-priors."""

    entries: Mapping[str, GaussianHyperPrior] = field(default_factory=dict)

    def __getitem__(self, name: str) -> GaussianHyperPrior:
        try:
            return self.entries[name]
        except KeyError:
            raise ConfigurationError(f"No hyper-prior declared for '{name}'") from None

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def to_internal(self, values: Mapping[str, float]) -> Dict[str, float]:
        return {name: self[name].coordinate.to_internal(v) for name, v in values.items()}

    def to_values(self, internal: Mapping[str, float]) -> Dict[str, float]:
        return {name: self[name].coordinate.to_value(v) for name, v in internal.items()}

    def log_density(self, internal: Mapping[str, float]) -> float:
        """Sum of the declared log-densities, evaluated in internal coordinates."""
        return float(sum(self[name].log_density(v) for name, v in internal.items()))

    def to_dict(self) -> Dict[str, Any]:
        return {name: entry.to_dict() for name, entry in self.entries.items()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HyperPrior":
        return cls({name: GaussianHyperPrior.from_dict(entry) for name, entry in data.items()})
