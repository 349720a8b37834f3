"""Metropolis-within-Gibbs updates for kernel and structural hyperparameters."""

from typing import Dict, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.stats import norm

from hamgp.basis.expansion import BasisExpansion
from hamgp.basis.spectral import KernelHyperparams
from hamgp.hamiltonian.integrators import euler_transition_mean
from hamgp.hamiltonian.structure import NoiseSpec, SystemStructure
from hamgp.learn.hyperpriors import Coordinate, HyperPrior
from hamgp.learn.nig import NIGPriorFactory, SuffStats, accumulate_stats, log_marginal_likelihood
from hamgp.smc.base import LatentTrajectory
from hamgp.smc.densities import GaussianLogDensity
from hamgp.utils.exceptions import ConfigurationError, NumericalError, ValidationError

DEFAULT_PROPOSAL_SCALE = 0.05
ADAPTATION_WINDOW = 50
TARGET_ACCEPTANCE = (0.2, 0.4)
SHRINK, GROW = 0.7, 1.3

_REJECTABLE = (ConfigurationError, ValidationError, NumericalError)


class MHStep(NamedTuple):
    """Outcome of one accept/reject update."""

    value: Union[KernelHyperparams, Dict[str, float]]
    accepted: bool
    log_likelihood: float


class RandomWalkProposal:
    """Gaussian random walk in internal coordinates with burn-in scale adaptation.

    Scales are adjusted every ``window`` recorded steps toward an acceptance
    rate inside ``TARGET_ACCEPTANCE``; :meth:`freeze` stops adaptation.
    """

    def __init__(
        self,
        names: Sequence[str],
        scales: Union[float, Mapping[str, float]] = DEFAULT_PROPOSAL_SCALE,
        adapt: bool = True,
        window: int = ADAPTATION_WINDOW,
    ):
        self.names = list(names)
        if isinstance(scales, Mapping):
            self.scales = {n: float(scales.get(n, DEFAULT_PROPOSAL_SCALE)) for n in self.names}
        else:
            self.scales = {n: float(scales) for n in self.names}
        if any(s < 0 for s in self.scales.values()):
            raise ConfigurationError(f"Proposal scales must be non-negative, got {self.scales}")
        self.adapt = adapt
        self.window = window
        self._accepted = 0
        self._count = 0

    def propose(self, internal: Mapping[str, float], rng: np.random.Generator) -> Dict[str, float]:
        steps = rng.standard_normal(len(self.names))
        return {n: internal[n] + self.scales[n] * z for n, z in zip(self.names, steps)}

    def record(self, accepted: bool) -> None:
        if not self.adapt:
            return
        self._accepted += int(accepted)
        self._count += 1
        if self._count < self.window:
            return
        rate = self._accepted / self._count
        low, high = TARGET_ACCEPTANCE
        factor = SHRINK if rate < low else GROW if rate > high else 1.0
        if factor != 1.0:
            self.scales = {n: s * factor for n, s in self.scales.items()}
            logger.debug(f"Adapted proposal scales for {self.names}: rate {rate:.2f}, scales {self.scales}")
        self._accepted = self._count = 0

    def freeze(self) -> None:
        self.adapt = False

    def to_dict(self) -> Dict[str, float]:
        return dict(self.scales)


def _accept(log_ratio: float, rng: np.random.Generator) -> bool:
    return bool(rng.uniform() < np.exp(min(0.0, log_ratio)))


def kernel_log_target(
    internal: Mapping[str, float],
    stats: SuffStats,
    prior_factory: NIGPriorFactory,
    hyper_prior: HyperPrior,
) -> Tuple[float, float]:
    """(log marginal likelihood, log target) of kernel hyperparameters in internal coordinates."""
    hyper = KernelHyperparams.from_dict(hyper_prior.to_values(internal))
    log_lik = log_marginal_likelihood(prior_factory(hyper), stats)
    return log_lik, log_lik + hyper_prior.log_density(internal)


def mh_step_kernel_hypers(
    current: KernelHyperparams,
    trajectory: LatentTrajectory,
    prior_factory: NIGPriorFactory,
    hyper_prior: HyperPrior,
    proposal: RandomWalkProposal,
    rng: np.random.Generator,
    stats: Optional[SuffStats] = None,
) -> MHStep:
    """One MH update of (sigma_f^2, ell) with the weights and noise integrated out.

    The target is the NIG marginal likelihood of the gradient observations
    times the hyper-prior. Proposals that fail validation are rejected.
    """
    stats = accumulate_stats(trajectory, prior_factory.expansion) if stats is None else stats
    internal = hyper_prior.to_internal(current.to_dict())
    log_lik, log_target = kernel_log_target(internal, stats, prior_factory, hyper_prior)

    proposed = proposal.propose(internal, rng)
    try:
        proposed_lik, proposed_target = kernel_log_target(proposed, stats, prior_factory, hyper_prior)
    except _REJECTABLE as e:
        logger.debug(f"Kernel proposal rejected: {e}")
        proposal.record(False)
        rng.uniform()
        return MHStep(current, False, log_lik)

    accepted = _accept(proposed_target - log_target, rng)
    proposal.record(accepted)
    if accepted:
        return MHStep(KernelHyperparams.from_dict(hyper_prior.to_values(proposed)), True, proposed_lik)
    return MHStep(current, False, log_lik)


def structural_log_likelihood(
    structure: SystemStructure,
    hypers: Mapping[str, float],
    trajectory: LatentTrajectory,
    inputs: np.ndarray,
    noise: NoiseSpec,
    delta: float,
) -> float:
    """sum_{t>=1} log N(x_t | x_{t-1} + delta((J - R) h_{t-1} + G u_{t-1}), Sigma_w).

    Raises:
        ConfigurationError: If the hyperparameters make J or R inadmissible
    """
    matrices = structure.instantiate(hypers)
    x, h = trajectory.states, trajectory.gradients
    mean = euler_transition_mean(matrices, x[:-1], h[:-1], np.asarray(inputs)[: trajectory.T], delta)
    return float(np.sum(GaussianLogDensity(noise.process_cov)(x[1:] - mean)))


class _LaplaceMoments:
    """Newton proposal moments for a single slot whose Euler mean is affine in it."""

    def __init__(self, structure, slot, trajectory, inputs, noise, delta, prior, fallback_scale, scale):
        self.structure = structure
        self.slot = slot
        self.prior = prior
        self.fallback_scale = fallback_scale
        self.scale = scale
        self.trajectory = trajectory
        self.inputs = np.asarray(inputs)[: trajectory.T]
        self.delta = delta
        self.precision = np.linalg.inv(noise.process_cov)
        dmat = structure.slot_derivatives(slot)
        self.c = delta * dmat.flow(trajectory.gradients[:-1], self.inputs)

    def __call__(self, theta: float) -> Tuple[float, float]:
        coordinate = self.prior.coordinate
        value = coordinate.to_value(theta)
        try:
            matrices = self.structure.instantiate({self.slot: value})
        except ConfigurationError:
            return theta, self.fallback_scale
        x, h = self.trajectory.states, self.trajectory.gradients
        residual = x[1:] - euler_transition_mean(matrices, x[:-1], h[:-1], self.inputs, self.delta)
        weighted = self.c @ self.precision
        grad = float(np.sum(weighted * residual))
        hess = -float(np.sum(weighted * self.c))
        if coordinate is Coordinate.LOG:
            grad, hess = value * grad, value * value * hess + value * grad
        grad -= (theta - self.prior.mean) / self.prior.std ** 2
        hess -= 1.0 / self.prior.std ** 2
        if not (np.isfinite(hess) and hess < 0):
            return theta, self.fallback_scale
        return theta - grad / hess, float(np.sqrt(-self.scale / hess))


def mh_step_structural_hypers(
    current: Mapping[str, float],
    trajectory: LatentTrajectory,
    structure: SystemStructure,
    noise: NoiseSpec,
    expansion: BasisExpansion,
    delta: float,
    hyper_prior: HyperPrior,
    proposal: RandomWalkProposal,
    rng: np.random.Generator,
    inputs: np.ndarray,
    laplace: bool = True,
    laplace_scale: float = 1.0,
) -> MHStep:
    """One MH update of the structural slots of J, R, G.

    The likelihood is the product of Euler transition densities along the
    trajectory, with the gradient observations standing in for the gradient.
    With a single slot and ``laplace`` set, the proposal is a Gaussian at the
    Newton step of the log target, falling back to the random walk wherever
    the curvature is not negative. Proposals violating skew-symmetry of J or
    PSD-ness of R are rejected.
    """
    if trajectory.states.shape[1] != expansion.n_x:
        raise ValidationError(f"Trajectory dimension {trajectory.states.shape[1]} does not match expansion")
    current = dict(current)
    names = structure.slots
    internal = hyper_prior.to_internal({n: current[n] for n in names})
    log_lik = structural_log_likelihood(structure, current, trajectory, inputs, noise, delta)
    log_target = log_lik + hyper_prior.log_density(internal)

    log_q_ratio = 0.0
    if laplace and len(names) == 1:
        slot = names[0]
        moments = _LaplaceMoments(
            structure, slot, trajectory, inputs, noise, delta,
            hyper_prior[slot], proposal.scales[slot], laplace_scale,
        )
        mean, std = moments(internal[slot])
        if std > 0:
            theta = mean + std * rng.standard_normal()
            proposed = {slot: float(theta)}
            back_mean, back_std = moments(theta)
            if back_std > 0:
                log_q_ratio = float(
                    norm.logpdf(internal[slot], back_mean, back_std) - norm.logpdf(theta, mean, std)
                )
        else:
            rng.standard_normal()
            proposed = dict(internal)
    else:
        proposed = proposal.propose(internal, rng)

    values = hyper_prior.to_values(proposed)
    try:
        proposed_lik = structural_log_likelihood(structure, values, trajectory, inputs, noise, delta)
    except ConfigurationError as e:
        logger.debug(f"Structural proposal rejected by PSD guard: {e}")
        proposal.record(False)
        rng.uniform()
        return MHStep(current, False, log_lik)

    proposed_target = proposed_lik + hyper_prior.log_density(proposed)
    accepted = _accept(proposed_target - log_target + log_q_ratio, rng)
    proposal.record(accepted)
    if accepted:
        return MHStep(values, True, proposed_lik)
    return MHStep(current, False, log_lik)
