"""Reduced-rank Gaussian process basis: eigenfunctions and spectral densities."""

from hamgp.basis.expansion import (
    DEFAULT_MAX_INDEX_PER_DIM,
    BasisExpansion,
    DomainBox,
    SymmetryMode,
    build_expansion,
    eigenvalues_from_indices,
    eval_basis,
    eval_basis_jacobian,
)
from hamgp.basis.spectral import (
    SQUARED_EXPONENTIAL,
    KernelHyperparams,
    SpectralDensity,
    SquaredExponential,
    approx_kernel,
    prior_weight_covariance,
    spectral_density_se,
)

__all__ = [
    "DEFAULT_MAX_INDEX_PER_DIM",
    "BasisExpansion",
    "DomainBox",
    "SymmetryMode",
    "build_expansion",
    "eigenvalues_from_indices",
    "eval_basis",
    "eval_basis_jacobian",
    "KernelHyperparams",
    "SpectralDensity",
    "SquaredExponential",
    "SQUARED_EXPONENTIAL",
    "spectral_density_se",
    "prior_weight_covariance",
    "approx_kernel",
]
