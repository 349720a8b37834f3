"""Hamiltonian, gradient and drift predictions of the reduced-rank model."""

from typing import Optional

import numpy as np

from hamgp.basis.expansion import BasisExpansion, eval_basis, eval_basis_jacobian
from hamgp.hamiltonian.params import GPParams
from hamgp.hamiltonian.structure import StructureMatrices, SystemStructure
from hamgp.utils.exceptions import ValidationError


def _check_weights(expansion: BasisExpansion, params: GPParams) -> None:
    if params.M != expansion.M:
        raise ValidationError(f"Model has {params.M} weights, expansion has {expansion.M} functions")


def predict_hamiltonian(expansion: BasisExpansion, params: GPParams, x: np.ndarray) -> np.ndarray:
    """H_hat(x) = a^T phi(x)."""
    _check_weights(expansion, params)
    return eval_basis(expansion, x) @ params.weights


def predict_gradient(expansion: BasisExpansion, params: GPParams, x: np.ndarray) -> np.ndarray:
    """grad H_hat(x) = J_phi(x) a, shape (..., n_x)."""
    _check_weights(expansion, params)
    return eval_basis_jacobian(expansion, x) @ params.weights


def drift(
    expansion: BasisExpansion,
    params: GPParams,
    structure: SystemStructure,
    x: np.ndarray,
    u: np.ndarray,
    matrices: Optional[StructureMatrices] = None,
) -> np.ndarray:
    """(J - R) grad H_hat(x) + G u for the bound structural hyperparameters."""
    if structure.n_x != expansion.n_x:
        raise ValidationError("Structure and expansion disagree on the state dimension")
    matrices = matrices or structure.instantiate()
    return matrices.flow(predict_gradient(expansion, params, x), u)
