"""hamgp - Bayesian learning of port-Hamiltonian systems with reduced-rank GPs."""

__version__ = "0.1.0"

from hamgp.basis import BasisExpansion, KernelHyperparams, build_expansion
from hamgp.hamiltonian import GPParams, NoiseSpec, SystemStructure
from hamgp.learn import ChainSample, GibbsConfig, run_particle_gibbs

__all__ = [
    "__version__",
    "BasisExpansion",
    "KernelHyperparams",
    "build_expansion",
    "GPParams",
    "NoiseSpec",
    "SystemStructure",
    "ChainSample",
    "GibbsConfig",
    "run_particle_gibbs",
]
