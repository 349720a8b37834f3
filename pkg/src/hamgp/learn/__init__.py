"""Conjugate parameter learning, hyperparameter MH and the particle Gibbs loop."""

from hamgp.learn.artifacts import ChainWriter, read_chain, read_trajectories, retained_samples
from hamgp.learn.gibbs import (
    KERNEL_NAMES,
    ChainSample,
    GibbsConfig,
    ParticleGibbsSampler,
    SamplerSettings,
    run_particle_gibbs,
)
from hamgp.learn.hyperpriors import Coordinate, GaussianHyperPrior, HyperPrior
from hamgp.learn.mh import (
    MHStep,
    RandomWalkProposal,
    kernel_log_target,
    mh_step_kernel_hypers,
    mh_step_structural_hypers,
    structural_log_likelihood,
)
from hamgp.learn.nig import (
    NIGParams,
    NIGPriorFactory,
    SuffStats,
    accumulate_stats,
    log_marginal_likelihood,
    log_nig_density,
    log_normalizer,
    posterior_update,
    sample_nig,
)

__all__ = [
    "NIGParams",
    "NIGPriorFactory",
    "SuffStats",
    "accumulate_stats",
    "posterior_update",
    "sample_nig",
    "log_normalizer",
    "log_nig_density",
    "log_marginal_likelihood",
    "Coordinate",
    "GaussianHyperPrior",
    "HyperPrior",
    "MHStep",
    "RandomWalkProposal",
    "kernel_log_target",
    "mh_step_kernel_hypers",
    "mh_step_structural_hypers",
    "structural_log_likelihood",
    "KERNEL_NAMES",
    "ChainSample",
    "GibbsConfig",
    "SamplerSettings",
    "ParticleGibbsSampler",
    "run_particle_gibbs",
    "ChainWriter",
    "read_chain",
    "read_trajectories",
    "retained_samples",
]
