"""Conditional sequential Monte Carlo with a clamped reference trajectory."""

from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.special import logsumexp

from hamgp.smc.base import LatentTrajectory, StateSpaceModel
from hamgp.smc.resampling import systematic_resample
from hamgp.utils.exceptions import DegenerateSweepError, ValidationError


@dataclass(frozen=True)
class SweepResult:
    """Output of one CSMC sweep with per-step diagnostics."""

    trajectory: LatentTrajectory
    ess: np.ndarray
    log_evidence: float


def normalize_log_weights(log_weights: np.ndarray, step: int) -> np.ndarray:
    """Exponentiate and normalize; raise when every weight vanishes."""
    total = logsumexp(log_weights)
    if not np.isfinite(total):
        raise DegenerateSweepError(step)
    weights = np.exp(log_weights - total)
    return weights / weights.sum()


class ConditionalSMC:
    """Bootstrap conditional particle filter with optional ancestor sampling.

    Particles ``0 .. N-2`` move freely; particle ``N-1`` is clamped to the
    reference trajectory at every step. With ancestor sampling the reference's
    ancestor is redrawn in proportion to ``w_{t-1} p(x_t^ref | z_{t-1})``; the
    gradient factor ``p(h_t^ref | x_t^ref)`` is the same for every candidate
    and drops out of the normalized draw.
    """

    def __init__(self, model: StateSpaceModel, num_particles: int, ancestor_sampling: bool = True):
        if num_particles < 2:
            raise ValidationError(f"Conditional SMC needs at least 2 particles, got {num_particles}")
        self.model = model
        self.num_particles = num_particles
        self.ancestor_sampling = ancestor_sampling

    def sweep(self, reference: LatentTrajectory, rng: np.random.Generator) -> SweepResult:
        model, N = self.model, self.num_particles
        T = reference.T
        ref = N - 1

        states = np.empty((T + 1, N, model.n_x))
        gradients = np.empty((T + 1, N, model.n_h))
        ancestors = np.empty((T + 1, N), dtype=int)
        ancestors[0] = np.arange(N)
        ess = np.empty(T + 1)
        log_evidence = 0.0

        states[0, :ref], gradients[0, :ref] = model.sample_initial(rng, N - 1)
        states[0, ref], gradients[0, ref] = reference.states[0], reference.gradients[0]
        log_weights = model.measurement_log_density(states[0], 0)
        weights = normalize_log_weights(log_weights, 0)
        log_evidence += float(logsumexp(log_weights) - np.log(N))
        ess[0] = 1.0 / np.sum(weights ** 2)

        for t in range(1, T + 1):
            free = systematic_resample(weights, rng.uniform(), n=N - 1)
            if self.ancestor_sampling:
                with np.errstate(divide="ignore"):
                    log_prior = np.log(weights)
                log_as = log_prior + model.transition_log_density(
                    states[t - 1], gradients[t - 1], reference.states[t][None, :], t
                )
                ref_ancestor = rng.choice(N, p=normalize_log_weights(log_as, t))
            else:
                ref_ancestor = ref
            ancestors[t, :ref] = free
            ancestors[t, ref] = ref_ancestor

            states[t, :ref], gradients[t, :ref] = model.propagate(
                rng, states[t - 1, free], gradients[t - 1, free], t
            )
            states[t, ref], gradients[t, ref] = reference.states[t], reference.gradients[t]

            log_weights = model.measurement_log_density(states[t], t)
            weights = normalize_log_weights(log_weights, t)
            log_evidence += float(logsumexp(log_weights) - np.log(N))
            ess[t] = 1.0 / np.sum(weights ** 2)

        index = int(rng.choice(N, p=weights))
        path = np.empty(T + 1, dtype=int)
        for t in range(T, -1, -1):
            path[t] = index
            index = ancestors[t, index]

        steps = np.arange(T + 1)
        trajectory = LatentTrajectory(states[steps, path], gradients[steps, path])
        logger.debug(f"CSMC sweep: mean ESS {ess.mean():.2f} of {N}, min {ess.min():.2f}")
        return SweepResult(trajectory=trajectory, ess=ess, log_evidence=log_evidence)
