"""Latent trajectories, observed data and the state-space model interface."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from hamgp.utils.exceptions import ValidationError


def _frozen(array: np.ndarray, ndim: int) -> np.ndarray:
    array = np.array(array, dtype=float)
    if array.ndim == 1 and ndim == 2:
        array = array[:, None]
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class LatentTrajectory:
    """Hidden states x_0:T and gradient observations h_0:T."""

    states: np.ndarray
    gradients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", _frozen(self.states, 2))
        object.__setattr__(self, "gradients", _frozen(self.gradients, 2))
        self.validate()

    def validate(self) -> bool:
        if self.states.ndim != 2 or self.gradients.ndim != 2:
            raise ValidationError("Trajectory arrays must be (T+1) x n")
        if self.states.shape[0] != self.gradients.shape[0]:
            raise ValidationError(
                f"State path has {self.states.shape[0]} steps, gradient path {self.gradients.shape[0]}"
            )
        return True

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1

    def concatenate(self, other: "LatentTrajectory") -> "LatentTrajectory":
        return LatentTrajectory(
            np.concatenate([self.states, other.states]),
            np.concatenate([self.gradients, other.gradients]),
        )


@dataclass(frozen=True)
class ObservedData:
    """Inputs u_0:T and measurements y_0:T on a common time grid."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "inputs", _frozen(self.inputs, 2))
        object.__setattr__(self, "outputs", _frozen(self.outputs, 2))
        if self.inputs.shape[0] != self.outputs.shape[0]:
            raise ValidationError("Inputs and outputs must cover the same time steps")

    @property
    def T(self) -> int:
        return self.outputs.shape[0] - 1


class StateSpaceModel(ABC):
    """Bootstrap state-space model consumed by conditional SMC.

    The latent variable at time t is a pair (x_t, h_t); models without an
    auxiliary component use ``n_h = 0``. Time index ``t`` in ``propagate`` and
    ``transition_log_density`` refers to the step being entered.
    """

    n_x: int
    n_h: int

    @abstractmethod
    def sample_initial(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """Draw n particles (x_0, h_0) from the initial density."""
        raise NotImplementedError

    @abstractmethod
    def propagate(
        self, rng: np.random.Generator, x_prev: np.ndarray, h_prev: np.ndarray, t: int
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Draw (x_t, h_t) given each particle's (x_{t-1}, h_{t-1})."""
        raise NotImplementedError

    @abstractmethod
    def transition_log_density(
        self, x_prev: np.ndarray, h_prev: np.ndarray, x_next: np.ndarray, t: int
    ) -> np.ndarray:
        """log p(x_t | x_{t-1}, h_{t-1}) per particle."""
        raise NotImplementedError

    @abstractmethod
    def measurement_log_density(self, x: np.ndarray, t: int) -> np.ndarray:
        """log p(y_t | x_t) per particle."""
        raise NotImplementedError
