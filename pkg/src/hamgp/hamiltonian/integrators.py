"""Time discretizations of the port-Hamiltonian dynamics."""

from typing import Callable, Optional

import numpy as np

from hamgp.basis.expansion import BasisExpansion
from hamgp.hamiltonian.model import drift
from hamgp.hamiltonian.params import GPParams
from hamgp.hamiltonian.structure import StructureMatrices, SystemStructure
from hamgp.utils.exceptions import ConfigurationError, ValidationError

GradientFn = Callable[[np.ndarray], np.ndarray]


def _check_step(delta: float) -> None:
    if not delta > 0:
        raise ValidationError(f"Step size must be positive, got {delta}")


def euler_step(
    expansion: BasisExpansion,
    params: GPParams,
    structure: SystemStructure,
    x: np.ndarray,
    u: np.ndarray,
    delta: float,
    matrices: Optional[StructureMatrices] = None,
) -> np.ndarray:
    """Explicit Euler: x + delta * drift(x, u)."""
    _check_step(delta)
    return np.asarray(x, dtype=float) + delta * drift(expansion, params, structure, x, u, matrices)


def euler_transition_mean(
    matrices: StructureMatrices, x: np.ndarray, h: np.ndarray, u: np.ndarray, delta: float
) -> np.ndarray:
    """Euler mean x + delta * ((J - R) h + G u) with h standing in for the gradient."""
    return x + delta * matrices.flow(h, u)


def symplectic_euler_step(
    hamiltonian_gradient: GradientFn,
    structure: SystemStructure,
    x: np.ndarray,
    u: np.ndarray,
    delta: float,
    matrices: Optional[StructureMatrices] = None,
) -> np.ndarray:
    """Momentum-first semi-implicit Euler on x = (q, p).

    p+ uses the flow evaluated at (q, p); q+ uses the flow evaluated at
    (q, p+). Both updates are explicit, so no fixed-point iteration is needed
    for non-separable Hamiltonians.
    """
    _check_step(delta)
    x = np.asarray(x, dtype=float)
    n_x = x.shape[-1]
    if n_x % 2 or n_x != structure.n_x:
        raise ConfigurationError(
            f"Symplectic Euler needs an even state dimension matching the structure, got {n_x}"
        )
    n = n_x // 2
    matrices = matrices or structure.instantiate()

    p_next = x[..., n:] + delta * matrices.flow(hamiltonian_gradient(x), u)[..., n:]
    x_mid = np.concatenate([x[..., :n], p_next], axis=-1)
    q_next = x[..., :n] + delta * matrices.flow(hamiltonian_gradient(x_mid), u)[..., :n]
    return np.concatenate([q_next, p_next], axis=-1)


def rollout_symplectic(
    hamiltonian_gradient: GradientFn,
    structure: SystemStructure,
    x0: np.ndarray,
    inputs: np.ndarray,
    delta: float,
    process_noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Iterate :func:`symplectic_euler_step` over ``inputs[:-1]``.

    Args:
        hamiltonian_gradient: Gradient of H, maps (..., n_x) to (..., n_x)
        structure: Structure with every slot bound
        x0: Initial state
        inputs: Input sequence u_0:T, shape (T+1, n_u)
        delta: Step size
        process_noise: Optional (T, n_x) perturbations added after each step

    Returns:
        States x_0:T, shape (T+1, n_x)
    """
    inputs = np.asarray(inputs, dtype=float).reshape(len(inputs), -1)
    matrices = structure.instantiate()
    states = np.empty((inputs.shape[0], structure.n_x))
    states[0] = x0
    for t in range(1, inputs.shape[0]):
        states[t] = symplectic_euler_step(hamiltonian_gradient, structure, states[t - 1], inputs[t - 1], delta, matrices)
        if process_noise is not None:
            states[t] += process_noise[t - 1]
    return states
