"""Normal-inverse-Gamma conjugate learning of the basis weights.

The prior N(a | m, sigma^2 V) IG(sigma^2 | psi, nu) is kept in the restricted
exponential family form: trajectory statistics are summed onto prior
statistics and mapped back to distribution parameters.

Degrees of freedom are stored as accumulated. A posterior carries
``nu = nu_prior + 2 + M + r2`` together with ``dof_offset = 2 + M``; every
consumer reads the conventional shape through :attr:`NIGParams.dof`, so the
offset is applied in exactly one place.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from hamgp.basis.expansion import BasisExpansion, eval_basis_jacobian
from hamgp.basis.spectral import KernelHyperparams, prior_weight_covariance
from hamgp.hamiltonian.params import GPParams
from hamgp.smc.base import LatentTrajectory
from hamgp.smc.densities import LOG_2PI
from hamgp.utils.exceptions import NumericalError, ValidationError


def _cholesky(matrix: np.ndarray, what: str) -> np.ndarray:
    try:
        return linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError as e:
        raise NumericalError(f"{what} is not positive definite", float(np.linalg.cond(matrix))) from e


@dataclass(frozen=True)
class NIGParams:
    """Distribution parameters eta = {m, V, psi, nu} of an NIG density."""

    mean: np.ndarray
    scale: np.ndarray
    psi: float
    nu: float
    dof_offset: float = 0.0

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float, ndmin=1).reshape(-1)
        scale = np.array(self.scale, dtype=float).reshape(mean.shape[0], mean.shape[0])
        mean.setflags(write=False)
        scale.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "psi", float(self.psi))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "dof_offset", float(self.dof_offset))
        self.validate()

    def validate(self) -> bool:
        if not np.allclose(self.scale, self.scale.T):
            raise ValidationError("NIG scale matrix must be symmetric")
        if self.M:
            _cholesky(self.scale, "NIG scale matrix")
        if not self.psi > 0:
            raise ValidationError(f"NIG scale psi must be positive, got {self.psi}")
        if not (self.nu > 0 and self.dof > 0):
            raise ValidationError(f"NIG degrees of freedom must be positive, got {self.nu}")
        return True

    @property
    def M(self) -> int:
        return self.mean.shape[0]

    @property
    def dof(self) -> float:
        """Conventional degrees of freedom: IG shape is dof / 2."""
        return self.nu - self.dof_offset

    @property
    def scale_cholesky(self) -> np.ndarray:
        return _cholesky(self.scale, "NIG scale matrix")

    @classmethod
    def zero_mean(cls, scale: np.ndarray, psi: float, nu: float) -> "NIGParams":
        scale = np.atleast_2d(scale)
        return cls(np.zeros(scale.shape[0]), scale, psi, nu)


@dataclass(frozen=True)
class SuffStats:
    """Trajectory statistics s1 = sum J^T h, s2 = sum h^T h, r1 = sum J^T J, r2 = count."""

    s1: np.ndarray
    s2: float
    r1: np.ndarray
    r2: float

    def __add__(self, other: "SuffStats") -> "SuffStats":
        return SuffStats(self.s1 + other.s1, self.s2 + other.s2, self.r1 + other.r1, self.r2 + other.r2)

    @classmethod
    def zeros(cls, M: int) -> "SuffStats":
        return cls(np.zeros(M), 0.0, np.zeros((M, M)), 0.0)


def accumulate_stats(trajectory: LatentTrajectory, expansion: BasisExpansion) -> SuffStats:
    """Sufficient statistics of the gradient observations h_t | x_t."""
    if trajectory.states.shape[1] != expansion.n_x or trajectory.gradients.shape[1] != expansion.n_x:
        raise ValidationError(
            f"Trajectory dimension {trajectory.states.shape[1]} does not match expansion {expansion.n_x}"
        )
    jac = eval_basis_jacobian(expansion, trajectory.states)  # (T+1, n_x, M)
    h = trajectory.gradients
    return SuffStats(
        s1=np.einsum("tim,ti->m", jac, h),
        s2=float(np.sum(h * h)),
        r1=np.einsum("tim,tin->mn", jac, jac),
        r2=float(h.size),
    )


def posterior_update(prior: NIGParams, stats: SuffStats) -> NIGParams:
    """Conjugate update: add trajectory statistics to the prior statistics.

    Raises:
        NumericalError: If r1+ cannot be factorized
    """
    M = prior.M
    if stats.s1.shape != (M,):
        raise ValidationError(f"Statistics have dimension {stats.s1.shape[0]}, prior has {M}")
    prior_chol = prior.scale_cholesky
    prior_precision = linalg.cho_solve((prior_chol, True), np.eye(M))
    prior_s1 = prior_precision @ prior.mean
    prior_s2 = prior.psi + prior.mean @ prior_s1
    prior_r2 = prior.dof + 2.0 + M

    s1 = prior_s1 + stats.s1
    s2 = prior_s2 + stats.s2
    r1 = prior_precision + stats.r1
    r1 = 0.5 * (r1 + r1.T)
    chol = _cholesky(r1, "Posterior statistic r1+")

    mean = linalg.cho_solve((chol, True), s1)
    scale = linalg.cho_solve((chol, True), np.eye(M))
    psi = s2 - s1 @ mean
    if not psi > 0:
        raise NumericalError(f"Posterior scale psi+ = {psi:.3e} is not positive")
    return NIGParams(mean, 0.5 * (scale + scale.T), psi, prior_r2 + stats.r2, dof_offset=2.0 + M)


def sample_nig(posterior: NIGParams, rng: np.random.Generator) -> GPParams:
    """Draw sigma^2 ~ IG(shape dof/2, rate psi/2), then a ~ N(m, sigma^2 V)."""
    noise_variance = 1.0 / rng.gamma(shape=0.5 * posterior.dof, scale=2.0 / posterior.psi)
    z = rng.standard_normal(posterior.M)
    weights = posterior.mean + np.sqrt(noise_variance) * (posterior.scale_cholesky @ z)
    return GPParams(weights, noise_variance)


def log_normalizer(params: NIGParams, M: Optional[int] = None) -> float:
    """log n(eta) = (nu/2) log(psi/2) - (M/2) log 2 pi - (1/2) log|V| - log Gamma(nu/2)."""
    if M is not None and M != params.M:
        raise ValidationError(f"Expected M={params.M}, got {M}")
    log_det = 2.0 * float(np.sum(np.log(np.diag(params.scale_cholesky)))) if params.M else 0.0
    half_dof = 0.5 * params.dof
    return float(half_dof * np.log(0.5 * params.psi) - 0.5 * params.M * LOG_2PI - 0.5 * log_det - gammaln(half_dof))


def log_nig_density(params: NIGParams, weights: np.ndarray, noise_variance: float) -> float:
    """log NIG(a, sigma^2 | m, V, psi, nu)."""
    residual = np.asarray(weights, dtype=float) - params.mean
    quad = residual @ linalg.cho_solve((params.scale_cholesky, True), residual) if params.M else 0.0
    power = 0.5 * params.dof + 1.0 + 0.5 * params.M
    return float(
        log_normalizer(params) - power * np.log(noise_variance) - (params.psi + quad) / (2.0 * noise_variance)
    )


def log_marginal_likelihood(prior: NIGParams, stats: SuffStats) -> float:
    """log p(h_0:T | x_0:T, prior) = log n(eta) - log n(eta+) - (r2/2) log 2 pi."""
    posterior = posterior_update(prior, stats)
    return log_normalizer(prior) - log_normalizer(posterior) - 0.5 * stats.r2 * LOG_2PI


@dataclass(frozen=True)
class NIGPriorFactory:
    """Builds the zero-mean NIG prior for kernel hyperparameters on a fixed expansion."""

    expansion: BasisExpansion
    psi: float
    nu: float

    def __call__(self, hyper: KernelHyperparams) -> NIGParams:
        return NIGParams.zero_mean(prior_weight_covariance(self.expansion, hyper), self.psi, self.nu)
