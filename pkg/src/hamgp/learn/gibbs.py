"""Particle Gibbs with ancestor sampling for the Hamiltonian GP."""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from hamgp.basis.expansion import BasisExpansion
from hamgp.basis.spectral import KernelHyperparams
from hamgp.hamiltonian.params import GPParams
from hamgp.hamiltonian.structure import NoiseSpec, SystemStructure
from hamgp.learn.hyperpriors import HyperPrior
from hamgp.learn.mh import (
    DEFAULT_PROPOSAL_SCALE,
    MHStep,
    RandomWalkProposal,
    mh_step_kernel_hypers,
    mh_step_structural_hypers,
    structural_log_likelihood,
)
from hamgp.learn.nig import NIGParams, NIGPriorFactory, SuffStats, accumulate_stats, posterior_update, sample_nig
from hamgp.smc.base import LatentTrajectory, ObservedData
from hamgp.smc.csmc import ConditionalSMC, SweepResult
from hamgp.smc.models import DEFAULT_NUM_PARTICLES, HamiltonianStateSpace
from hamgp.utils.exceptions import ChainAbortedError, ConfigurationError, DegenerateSweepError, HamGPError

KERNEL_NAMES = ("signal_variance", "length_scale")


@dataclass
class SamplerSettings:
    """Run settings of the particle Gibbs chain."""

    iterations: int = 20000
    burn_in: int = 15000
    thinning: int = 1
    num_particles: int = DEFAULT_NUM_PARTICLES
    ancestor_sampling: bool = True
    seed: int = 0
    proposal_scales: Dict[str, float] = field(default_factory=dict)
    adapt: bool = True
    laplace_structural: bool = True
    update_kernel_hypers: bool = True
    update_structural_hypers: bool = True
    degenerate_retries: int = 3
    inflation: float = 10.0
    euler_step_s: float = 0.02
    trajectory_stride: int = 100

    def validate(self) -> bool:
        """Check run lengths, particle count, retry settings and proposal scales.

        Returns:
            True when every field is in range

        Raises:
            ConfigurationError: On the first invalid field
        """
        if self.iterations < 1:
            raise ConfigurationError(f"iterations must be >= 1, got {self.iterations}")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigurationError(
                f"burn_in must satisfy 0 <= burn_in < iterations, got {self.burn_in} and {self.iterations}"
            )
        if self.thinning < 1 or self.trajectory_stride < 1:
            raise ConfigurationError("thinning and trajectory_stride must be >= 1")
        if self.num_particles < 2:
            raise ConfigurationError(f"num_particles must be >= 2, got {self.num_particles}")
        if self.degenerate_retries < 0 or not self.inflation > 1.0:
            raise ConfigurationError("degenerate_retries must be >= 0 and inflation > 1")
        if not self.euler_step_s > 0:
            raise ConfigurationError(f"euler_step_s must be positive, got {self.euler_step_s}")
        if any(v < 0 for v in self.proposal_scales.values()):
            raise ConfigurationError("Proposal scales must be non-negative")
        return True

    def scale(self, name: str) -> float:
        """Random-walk proposal scale of a hyperparameter on its unconstrained scale.

        Args:
            name: Kernel hyperparameter or structural slot name

        Returns:
            The configured scale, else ``DEFAULT_PROPOSAL_SCALE``
        """
        return float(self.proposal_scales.get(name, DEFAULT_PROPOSAL_SCALE))


@dataclass
class GibbsConfig:
    """Everything the sampler needs besides the data and the random stream."""

    expansion: BasisExpansion
    structure: SystemStructure
    noise: NoiseSpec
    psi: float
    nu: float
    hyper_prior: HyperPrior
    kernel_hypers: KernelHyperparams
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    initial_mean: Optional[np.ndarray] = None
    initial_cov: Optional[np.ndarray] = None

    def validate(self) -> bool:
        """Check that the model parts agree with each other and with the hyper-prior.

        Returns:
            True when the configuration is consistent

        Raises:
            ConfigurationError: If state dimensions disagree or a hyperparameter lacks a prior or initial value
        """
        self.sampler.validate()
        if not (self.expansion.n_x == self.structure.n_x == self.noise.n_x):
            raise ConfigurationError("Expansion, structure and noise disagree on the state dimension")
        undeclared = [n for n in list(KERNEL_NAMES) + self.structure.slots if n not in self.hyper_prior]
        if undeclared:
            raise ConfigurationError(f"No hyper-prior declared for {undeclared}")
        missing = [s for s in self.structure.slots if s not in self.structure.hypers]
        if missing:
            raise ConfigurationError(f"Structural slots without initial value: {missing}")
        self.structure.instantiate()
        return True


@dataclass
class ChainSample:
    """State of the chain after one Gibbs iteration.

    ``trajectory`` is kept only every ``trajectory_stride`` iterations.
    """

    iteration: int
    params: GPParams
    kernel_hypers: KernelHyperparams
    structural_hypers: Dict[str, float]
    trajectory: Optional[LatentTrajectory] = None
    accepted: Dict[str, bool] = field(default_factory=dict)
    log_likelihoods: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def to_record(self) -> Dict[str, Any]:
        """JSON-ready chain record; the trajectory is stored separately.

        Returns:
            Dict with k, kernel_hypers, structural_hypers, noise_variance, weights,
            accepted, log_likelihoods and diagnostics
        """
        return {
            "k": self.iteration,
            "kernel_hypers": self.kernel_hypers.to_dict(),
            "structural_hypers": {k: float(v) for k, v in self.structural_hypers.items()},
            "noise_variance": self.params.noise_variance,
            "weights": self.params.weights.tolist(),
            "accepted": {k: bool(v) for k, v in self.accepted.items()},
            "log_likelihoods": {k: float(v) for k, v in self.log_likelihoods.items()},
            "diagnostics": {k: float(v) for k, v in self.diagnostics.items()},
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "ChainSample":
        """Rebuild a sample from :meth:`to_record` output.

        Args:
            record: Parsed chain line; accepted, log_likelihoods and diagnostics may be absent

        Returns:
            Sample without a trajectory

        Raises:
            KeyError: If k, weights, noise_variance or kernel_hypers is missing
        """
        return cls(
            iteration=int(record["k"]),
            params=GPParams(np.asarray(record["weights"], dtype=float), float(record["noise_variance"])),
            kernel_hypers=KernelHyperparams.from_dict(record["kernel_hypers"]),
            structural_hypers={k: float(v) for k, v in record.get("structural_hypers", {}).items()},
            accepted=dict(record.get("accepted", {})),
            log_likelihoods=dict(record.get("log_likelihoods", {})),
            diagnostics=dict(record.get("diagnostics", {})),
        )


class ParticleGibbsSampler:
    """Alternates CSMC trajectory draws, hyperparameter MH blocks and the NIG draw.

    Each iteration k consumes the trajectory drawn at k for both MH blocks, and
    the weight draw consumes that trajectory together with the new kernel
    hyperparameters.
    """

    def __init__(self, config: GibbsConfig, data: ObservedData):
        config.validate()
        if data.inputs.shape[1] != config.structure.n_u:
            raise ConfigurationError(
                f"Data has {data.inputs.shape[1]} input channels, structure expects {config.structure.n_u}"
            )
        if data.outputs.shape[1] != config.noise.n_y:
            raise ConfigurationError(
                f"Data has {data.outputs.shape[1]} output channels, noise model expects {config.noise.n_y}"
            )
        self.config = config
        self.data = data
        settings = config.sampler
        self.prior_factory = NIGPriorFactory(config.expansion, config.psi, config.nu)
        self.kernel_proposal = RandomWalkProposal(
            KERNEL_NAMES, {n: settings.scale(n) for n in KERNEL_NAMES}, settings.adapt
        )
        slots = config.structure.slots
        self.structural_proposal = RandomWalkProposal(
            slots, {n: settings.scale(n) for n in slots}, settings.adapt
        )

    def initialize_trajectory(self) -> LatentTrajectory:
        """Measured outputs where observed, zeros elsewhere; zero gradients."""
        n_x = self.config.expansion.n_x
        states = np.zeros((self.data.T + 1, n_x))
        states[:, list(self.config.noise.observed)] = self.data.outputs
        return LatentTrajectory(states, np.zeros_like(states))

    def draw_trajectory(
        self,
        reference: LatentTrajectory,
        params: GPParams,
        structural: Mapping[str, float],
        rng: np.random.Generator,
        iteration: int,
    ) -> Tuple[SweepResult, int, int]:
        """CSMC sweep with measurement-noise inflation on degenerate weights.

        Args:
            reference: Trajectory kept in the last particle slot
            params: Current weights and process-noise variance
            structural: Current structural hyperparameters
            rng: Random stream
            iteration: Chain iteration, for logging and errors

        Returns:
            Tuple of (sweep result, retries used, out-of-domain evaluations)

        Raises:
            ChainAbortedError: If every retry degenerates
        """
        config, settings = self.config, self.config.sampler
        structure = config.structure.with_hypers(structural)
        out_of_domain = 0
        for attempt in range(settings.degenerate_retries + 1):
            noise = config.noise if attempt == 0 else config.noise.inflated(settings.inflation ** attempt)
            model = HamiltonianStateSpace(
                config.expansion, params, structure, noise, self.data,
                settings.euler_step_s, config.initial_mean, config.initial_cov,
            )
            try:
                result = ConditionalSMC(model, settings.num_particles, settings.ancestor_sampling).sweep(
                    reference, rng
                )
                return result, attempt, out_of_domain + model.out_of_domain
            except DegenerateSweepError as e:
                out_of_domain += model.out_of_domain
                logger.warning(f"Iteration {iteration}: {e}; retry {attempt + 1} with inflated measurement noise")
        raise ChainAbortedError(
            f"CSMC degenerated after {settings.degenerate_retries} retries", iteration
        )

    def draw_hypers(
        self,
        trajectory: LatentTrajectory,
        stats: SuffStats,
        kernel: KernelHyperparams,
        structural: Mapping[str, float],
        rng: np.random.Generator,
    ) -> Tuple[MHStep, MHStep]:
        """Kernel block then structural block, each a separate accept/reject.

        Args:
            trajectory: Current latent trajectory
            stats: Sufficient statistics of ``trajectory``
            kernel: Current kernel hyperparameters
            structural: Current structural hyperparameters
            rng: Random stream

        Returns:
            Tuple of (kernel step, structural step); a disabled block returns its
            input unchanged and not accepted
        """
        config, settings = self.config, self.config.sampler
        if settings.update_kernel_hypers:
            kernel_step = mh_step_kernel_hypers(
                kernel, trajectory, self.prior_factory, config.hyper_prior, self.kernel_proposal, rng, stats
            )
        else:
            kernel_step = MHStep(kernel, False, float("nan"))

        if settings.update_structural_hypers and config.structure.slots:
            structural_step = mh_step_structural_hypers(
                structural, trajectory, config.structure, config.noise, config.expansion,
                settings.euler_step_s, config.hyper_prior, self.structural_proposal, rng,
                self.data.inputs, laplace=settings.laplace_structural,
            )
        else:
            log_lik = structural_log_likelihood(
                config.structure, structural, trajectory, self.data.inputs, config.noise, settings.euler_step_s
            )
            structural_step = MHStep(dict(structural), False, log_lik)
        return kernel_step, structural_step

    def draw_params(
        self, kernel: KernelHyperparams, stats: SuffStats, rng: np.random.Generator
    ) -> Tuple[GPParams, NIGParams]:
        """Conjugate draw of the weights and process-noise variance.

        Args:
            kernel: Kernel hyperparameters that set the prior weight covariance
            stats: Sufficient statistics of the current trajectory
            rng: Random stream

        Returns:
            Tuple of (sampled parameters, posterior they were drawn from)
        """
        posterior = posterior_update(self.prior_factory(kernel), stats)
        return sample_nig(posterior, rng), posterior

    def run(self, rng: np.random.Generator, progress: bool = False) -> Iterator[ChainSample]:
        """Yield one ChainSample per iteration k = 1..K.

        Args:
            rng: Random stream; identical seeds give identical chains
            progress: Show a tqdm progress bar

        Yields:
            ChainSample after every iteration

        Raises:
            ChainAbortedError: On exhausted retries or any component error
        """
        config, settings = self.config, self.config.sampler
        trajectory = self.initialize_trajectory()
        kernel = config.kernel_hypers
        structural = dict(config.structure.hypers)
        try:
            stats = accumulate_stats(trajectory, config.expansion)
            kernel_step, structural_step = self.draw_hypers(trajectory, stats, kernel, structural, rng)
            kernel, structural = kernel_step.value, structural_step.value
            params, _ = self.draw_params(kernel, stats, rng)
        except HamGPError as e:
            raise ChainAbortedError(str(e), 0) from e

        for k in tqdm(range(1, settings.iterations + 1), desc="particle Gibbs", disable=not progress):
            if k == settings.burn_in + 1:
                self.kernel_proposal.freeze()
                self.structural_proposal.freeze()
            try:
                sweep, retries, out_of_domain = self.draw_trajectory(trajectory, params, structural, rng, k)
                trajectory = sweep.trajectory
                stats = accumulate_stats(trajectory, config.expansion)
                kernel_step, structural_step = self.draw_hypers(trajectory, stats, kernel, structural, rng)
                kernel, structural = kernel_step.value, structural_step.value
                params, _ = self.draw_params(kernel, stats, rng)
            except ChainAbortedError:
                raise
            except HamGPError as e:
                raise ChainAbortedError(str(e), k) from e

            if out_of_domain:
                logger.warning(f"Iteration {k}: {out_of_domain} particle evaluations outside the basis domain")
            logger.debug(
                f"Iteration {k}: kernel {'accepted' if kernel_step.accepted else 'rejected'}, "
                f"structural {'accepted' if structural_step.accepted else 'rejected'}, "
                f"sigma^2 {params.noise_variance:.4g}"
            )
            keep = k % settings.trajectory_stride == 0 or k == settings.iterations
            yield ChainSample(
                iteration=k,
                params=params,
                kernel_hypers=kernel,
                structural_hypers=dict(structural),
                trajectory=trajectory if keep else None,
                accepted={"kernel": kernel_step.accepted, "structural": structural_step.accepted},
                log_likelihoods={"kernel": kernel_step.log_likelihood, "structural": structural_step.log_likelihood},
                diagnostics={
                    "mean_ess": float(sweep.ess.mean()),
                    "min_ess": float(sweep.ess.min()),
                    "log_evidence": sweep.log_evidence,
                    "retries": retries,
                    "out_of_domain": out_of_domain,
                },
            )


def run_particle_gibbs(
    config: GibbsConfig,
    data: ObservedData,
    rng: np.random.Generator,
    callback: Optional[Callable[[ChainSample], None]] = None,
    progress: bool = False,
) -> List[ChainSample]:
    """Run the chain to completion and return its K samples.

    Args:
        config: Model, priors and sampler settings
        data: Inputs and measurements u_0:T, y_0:T
        rng: Random stream; identical seeds give identical chains
        callback: Called with every sample as it is produced (artifact writers)
        progress: Show a tqdm progress bar

    Returns:
        List of ChainSample for k = 1..K
    """
    chain = []
    for sample in ParticleGibbsSampler(config, data).run(rng, progress):
        if callback is not None:
            callback(sample)
        chain.append(sample)
    logger.info(
        f"Particle Gibbs finished: {len(chain)} iterations, kernel acceptance "
        f"{np.mean([s.accepted['kernel'] for s in chain]):.2f}, structural acceptance "
        f"{np.mean([s.accepted['structural'] for s in chain]):.2f}"
    )
    return chain
