"""Conditional sequential Monte Carlo for latent trajectories."""

from hamgp.smc.base import LatentTrajectory, ObservedData, StateSpaceModel
from hamgp.smc.csmc import ConditionalSMC, SweepResult, normalize_log_weights
from hamgp.smc.densities import GaussianLogDensity, log_gaussian
from hamgp.smc.models import (
    DEFAULT_INITIAL_VARIANCE,
    DEFAULT_NUM_PARTICLES,
    HamiltonianStateSpace,
    LinearGaussianStateSpace,
    csmc_sweep,
    initial_state_mean,
)
from hamgp.smc.resampling import systematic_resample

__all__ = [
    "LatentTrajectory",
    "ObservedData",
    "StateSpaceModel",
    "ConditionalSMC",
    "SweepResult",
    "normalize_log_weights",
    "GaussianLogDensity",
    "log_gaussian",
    "HamiltonianStateSpace",
    "LinearGaussianStateSpace",
    "DEFAULT_INITIAL_VARIANCE",
    "DEFAULT_NUM_PARTICLES",
    "csmc_sweep",
    "initial_state_mean",
    "systematic_resample",
]
