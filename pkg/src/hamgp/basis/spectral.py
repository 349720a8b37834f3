"""Stationary kernels, their spectral densities and the reduced-rank prior."""

from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np

from hamgp.basis.expansion import BasisExpansion, eval_basis
from hamgp.utils.exceptions import ConfigurationError, ValidationError


@dataclass(frozen=True)
class KernelHyperparams:
    """Signal variance sigma_f^2 and length scale ell of a stationary kernel."""

    signal_variance: float
    length_scale: float

    def __post_init__(self):
        self.validate()

    def validate(self) -> bool:
        values = (self.signal_variance, self.length_scale)
        if not all(np.isfinite(v) and v > 0 for v in values):
            raise ConfigurationError(
                f"Kernel hyperparameters must be positive, got {asdict(self)}"
            )
        return True

    def to_dict(self) -> Dict[str, float]:
        return {"signal_variance": float(self.signal_variance), "length_scale": float(self.length_scale)}

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "KernelHyperparams":
        return cls(float(data["signal_variance"]), float(data["length_scale"]))


class SpectralDensity(ABC):
    """Base class for isotropic stationary kernels used by the reduced-rank GP.

    Implementations provide the spectral density S(omega) that weights the
    eigenfunctions and, for convergence checks, the exact kernel k(r).
    """

    name: str = ""

    @abstractmethod
    def density(self, hyper: KernelHyperparams, omega: np.ndarray, n_x: int) -> np.ndarray:
        """Spectral density at angular frequency magnitude omega >= 0."""
        raise NotImplementedError

    @abstractmethod
    def kernel(self, hyper: KernelHyperparams, r: np.ndarray) -> np.ndarray:
        """Exact kernel value at Euclidean distance r."""
        raise NotImplementedError


class SquaredExponential(SpectralDensity):
    """k(r) = sigma_f^2 exp(-r^2 / (2 ell^2))."""

    name = "squared_exponential"

    def density(self, hyper: KernelHyperparams, omega: np.ndarray, n_x: int) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if np.any(omega < 0):
            raise ValidationError("Spectral density is defined for omega >= 0")
        ell2 = hyper.length_scale ** 2
        return hyper.signal_variance * (2.0 * np.pi * ell2) ** (n_x / 2.0) * np.exp(-0.5 * ell2 * omega ** 2)

    def kernel(self, hyper: KernelHyperparams, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return hyper.signal_variance * np.exp(-0.5 * r ** 2 / hyper.length_scale ** 2)


SQUARED_EXPONENTIAL = SquaredExponential()


def spectral_density_se(hyper: KernelHyperparams, omega: float, n_x: int) -> float:
    """S_se(omega) = sigma_f^2 (2 pi ell^2)^(n_x/2) exp(-ell^2 omega^2 / 2)."""
    return float(SQUARED_EXPONENTIAL.density(hyper, omega, n_x))


def prior_weight_covariance(
    expansion: BasisExpansion,
    hyper: KernelHyperparams,
    spectral: SpectralDensity = SQUARED_EXPONENTIAL,
) -> np.ndarray:
    """Diagonal prior covariance V = diag(S(sqrt(rho_1)), ..., S(sqrt(rho_M)))."""
    return np.diag(spectral.density(hyper, np.sqrt(expansion.eigenvalues), expansion.n_x))


def approx_kernel(
    expansion: BasisExpansion,
    hyper: KernelHyperparams,
    x: np.ndarray,
    x_prime: np.ndarray,
    spectral: SpectralDensity = SQUARED_EXPONENTIAL,
) -> np.ndarray:
    """Reduced-rank kernel sum_k S(sqrt(rho_k)) phi_k(x) phi_k(x')."""
    weights = spectral.density(hyper, np.sqrt(expansion.eigenvalues), expansion.n_x)
    return np.sum(weights * eval_basis(expansion, x) * eval_basis(expansion, x_prime), axis=-1)
