"""Non-conservative Hamiltonian GP state-space model."""

from hamgp.hamiltonian.integrators import (
    euler_step,
    euler_transition_mean,
    rollout_symplectic,
    symplectic_euler_step,
)
from hamgp.hamiltonian.model import drift, predict_gradient, predict_hamiltonian
from hamgp.hamiltonian.params import GPParams
from hamgp.hamiltonian.structure import NoiseSpec, StructureMatrices, SystemStructure

__all__ = [
    "GPParams",
    "SystemStructure",
    "StructureMatrices",
    "NoiseSpec",
    "predict_hamiltonian",
    "predict_gradient",
    "drift",
    "euler_step",
    "euler_transition_mean",
    "symplectic_euler_step",
    "rollout_symplectic",
]
