"""State-space models for conditional SMC: the Hamiltonian GP and a linear surrogate."""

from typing import Optional, Tuple

import numpy as np

from hamgp.basis.expansion import BasisExpansion, eval_basis_jacobian
from hamgp.hamiltonian.integrators import euler_transition_mean
from hamgp.hamiltonian.params import GPParams
from hamgp.hamiltonian.structure import NoiseSpec, SystemStructure
from hamgp.smc.base import LatentTrajectory, ObservedData, StateSpaceModel
from hamgp.smc.csmc import ConditionalSMC
from hamgp.smc.densities import GaussianLogDensity
from hamgp.utils.exceptions import ValidationError

DEFAULT_INITIAL_VARIANCE = 0.01
DEFAULT_NUM_PARTICLES = 30


def initial_state_mean(data: ObservedData, noise: NoiseSpec) -> np.ndarray:
    """Measured components of y_0 where observed, zero elsewhere."""
    mean = np.zeros(noise.n_x)
    mean[list(noise.observed)] = data.outputs[0]
    return mean


class HamiltonianStateSpace(StateSpaceModel):
    """Euler-discretized Hamiltonian GP with latent gradient observations.

    x_t ~ N(x_{t-1} + delta ((J - R) h_{t-1} + G u_{t-1}), Sigma_w)
    h_t ~ N(J_phi(x_t) a, sigma^2 I)
    y_t ~ N(g(x_t), Sigma_e)
    """

    def __init__(
        self,
        expansion: BasisExpansion,
        params: GPParams,
        structure: SystemStructure,
        noise: NoiseSpec,
        data: ObservedData,
        delta: float,
        initial_mean: Optional[np.ndarray] = None,
        initial_cov: Optional[np.ndarray] = None,
    ):
        if not (expansion.n_x == structure.n_x == noise.n_x):
            raise ValidationError("Expansion, structure and noise disagree on the state dimension")
        if data.outputs.shape[1] != noise.n_y:
            raise ValidationError(
                f"Data has {data.outputs.shape[1]} output channels, noise model expects {noise.n_y}"
            )
        if data.inputs.shape[1] != structure.n_u:
            raise ValidationError(
                f"Data has {data.inputs.shape[1]} input channels, structure expects {structure.n_u}"
            )
        self.expansion = expansion
        self.params = params
        self.matrices = structure.instantiate()
        self.noise = noise
        self.data = data
        self.delta = float(delta)
        self.n_x = expansion.n_x
        self.n_h = expansion.n_x

        self.initial_mean = initial_state_mean(data, noise) if initial_mean is None else np.asarray(initial_mean, float)
        initial_cov = DEFAULT_INITIAL_VARIANCE * np.eye(self.n_x) if initial_cov is None else initial_cov
        self.initial_density = GaussianLogDensity(initial_cov)
        self.process_density = GaussianLogDensity(noise.process_cov)
        self.measurement_density = GaussianLogDensity(noise.measurement_cov)
        self.noise_std = float(np.sqrt(params.noise_variance))
        self.out_of_domain = 0

    def _sample_gradients(self, rng: np.random.Generator, x: np.ndarray) -> np.ndarray:
        inside = self.expansion.domain.contains(x)
        self.out_of_domain += int(np.count_nonzero(~inside))
        mean = eval_basis_jacobian(self.expansion, x) @ self.params.weights
        return mean + self.noise_std * rng.standard_normal(mean.shape)

    def sample_initial(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        x = self.initial_mean + self.initial_density.sample(rng, n)
        return x, self._sample_gradients(rng, x)

    def transition_mean(self, x_prev: np.ndarray, h_prev: np.ndarray, t: int) -> np.ndarray:
        return euler_transition_mean(self.matrices, x_prev, h_prev, self.data.inputs[t - 1], self.delta)

    def propagate(
        self, rng: np.random.Generator, x_prev: np.ndarray, h_prev: np.ndarray, t: int
    ) -> Tuple[np.ndarray, np.ndarray]:
        x = self.transition_mean(x_prev, h_prev, t) + self.process_density.sample(rng, x_prev.shape[0])
        return x, self._sample_gradients(rng, x)

    def transition_log_density(
        self, x_prev: np.ndarray, h_prev: np.ndarray, x_next: np.ndarray, t: int
    ) -> np.ndarray:
        return self.process_density(x_next - self.transition_mean(x_prev, h_prev, t))

    def gradient_log_density(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        """log N(h | J_phi(x) a, sigma^2 I) per particle."""
        residual = h - eval_basis_jacobian(self.expansion, x) @ self.params.weights
        var = self.params.noise_variance
        return -0.5 * np.sum(residual ** 2 / var + np.log(2.0 * np.pi * var), axis=-1)

    def measurement_log_density(self, x: np.ndarray, t: int) -> np.ndarray:
        return self.measurement_density(self.data.outputs[t] - self.noise.observe(x))


class LinearGaussianStateSpace(StateSpaceModel):
    """x_t = A x_{t-1} + w_t, y_t = C x_t + e_t, without gradient latents.

    Used as a Kalman-tractable surrogate to validate the sampler.
    """

    def __init__(
        self,
        A: np.ndarray,
        C: np.ndarray,
        Q: np.ndarray,
        R: np.ndarray,
        outputs: np.ndarray,
        initial_mean: np.ndarray,
        initial_cov: np.ndarray,
    ):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.C = np.atleast_2d(np.asarray(C, dtype=float))
        self.outputs = np.asarray(outputs, dtype=float).reshape(-1, self.C.shape[0])
        self.initial_mean = np.atleast_1d(np.asarray(initial_mean, dtype=float))
        self.process_density = GaussianLogDensity(Q)
        self.measurement_density = GaussianLogDensity(R)
        self.initial_density = GaussianLogDensity(initial_cov)
        self.n_x = self.A.shape[0]
        self.n_h = 0

    def sample_initial(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        return self.initial_mean + self.initial_density.sample(rng, n), np.zeros((n, 0))

    def propagate(
        self, rng: np.random.Generator, x_prev: np.ndarray, h_prev: np.ndarray, t: int
    ) -> Tuple[np.ndarray, np.ndarray]:
        n = x_prev.shape[0]
        return x_prev @ self.A.T + self.process_density.sample(rng, n), np.zeros((n, 0))

    def transition_log_density(
        self, x_prev: np.ndarray, h_prev: np.ndarray, x_next: np.ndarray, t: int
    ) -> np.ndarray:
        return self.process_density(x_next - x_prev @ self.A.T)

    def measurement_log_density(self, x: np.ndarray, t: int) -> np.ndarray:
        return self.measurement_density(self.outputs[t] - x @ self.C.T)


def csmc_sweep(
    data: ObservedData,
    reference: LatentTrajectory,
    params: GPParams,
    structure: SystemStructure,
    noise: NoiseSpec,
    expansion: BasisExpansion,
    N: int,
    delta: float,
    rng: np.random.Generator,
    ancestor_sampling: bool = True,
    initial_mean: Optional[np.ndarray] = None,
    initial_cov: Optional[np.ndarray] = None,
) -> LatentTrajectory:
    """Draw z_0:T by conditional SMC on the Hamiltonian GP model.

    Raises:
        DegenerateSweepError: If all weights vanish at some step
    """
    if reference.T != data.T:
        raise ValidationError(f"Reference has T={reference.T}, data has T={data.T}")
    model = HamiltonianStateSpace(
        expansion, params, structure, noise, data, delta, initial_mean, initial_cov
    )
    return ConditionalSMC(model, N, ancestor_sampling).sweep(reference, rng).trajectory
