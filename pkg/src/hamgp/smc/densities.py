"""Multivariate normal log-densities through Cholesky factors."""

import numpy as np
from scipy import linalg

from hamgp.utils.exceptions import NumericalError

LOG_2PI = float(np.log(2.0 * np.pi))


class GaussianLogDensity:
    """Zero-mean normal log-density with a fixed covariance, factorized once.

    Instances are immutable after construction and can be evaluated on
    batches of residuals with shape (..., d).
    """

    def __init__(self, covariance: np.ndarray):
        covariance = np.atleast_2d(np.asarray(covariance, dtype=float))
        try:
            self.cholesky = linalg.cholesky(covariance, lower=True)
        except linalg.LinAlgError as e:
            raise NumericalError(
                "Covariance is not positive definite", float(np.linalg.cond(covariance))
            ) from e
        self.dim = covariance.shape[0]
        self.log_det = 2.0 * float(np.sum(np.log(np.diag(self.cholesky))))
        self.cholesky.setflags(write=False)

    def __call__(self, residual: np.ndarray) -> np.ndarray:
        residual = np.asarray(residual, dtype=float)
        flat = residual.reshape(-1, self.dim)
        whitened = linalg.solve_triangular(self.cholesky, flat.T, lower=True)
        quad = np.sum(whitened ** 2, axis=0)
        values = -0.5 * (quad + self.log_det + self.dim * LOG_2PI)
        return values.reshape(residual.shape[:-1])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.standard_normal((size, self.dim)) @ self.cholesky.T


def log_gaussian(x: np.ndarray, mean: np.ndarray, covariance: np.ndarray) -> np.ndarray:
    """Exact log N(x | mean, covariance); x and mean broadcast over leading axes.

    Raises:
        NumericalError: If the covariance is not positive definite
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    return GaussianLogDensity(covariance)(x - mean)
