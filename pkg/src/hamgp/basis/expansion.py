"""Laplace eigenfunction dictionary on a rectangular domain."""

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from hamgp.utils.exceptions import ConfigurationError, ValidationError

DEFAULT_MAX_INDEX_PER_DIM = 12


class SymmetryMode(str, Enum):
    """Which index tuples a basis expansion admits.

    ``ANTISYMMETRIC`` keeps tuples with an odd count of even indices, so every
    basis function is odd under ``x -> -x`` for any state dimension.
    ``ANTISYMMETRIC_EVEN_INDICES`` keeps tuples whose indices are all even;
    the product is odd only for an odd state dimension.
    """

    NONE = "none"
    ANTISYMMETRIC = "antisymmetric"
    ANTISYMMETRIC_EVEN_INDICES = "antisymmetric_even_indices"

    def admits(self, index: Sequence[int]) -> bool:
        even = sum(1 for j in index if j % 2 == 0)
        if self is SymmetryMode.ANTISYMMETRIC:
            return even % 2 == 1
        if self is SymmetryMode.ANTISYMMETRIC_EVEN_INDICES:
            return even == len(index)
        return True


@dataclass(frozen=True)
class DomainBox:
    """Box domain [-L_1, L_1] x ... x [-L_n, L_n]."""

    bounds: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        if not self.bounds:
            raise ConfigurationError("Domain needs at least one bound")
        if any(not np.isfinite(b) or b <= 0 for b in self.bounds):
            raise ConfigurationError(f"Domain bounds must be positive, got {self.bounds}")

    @property
    def n_x(self) -> int:
        return len(self.bounds)

    def contains(self, x: np.ndarray) -> np.ndarray:
        """Boolean mask over leading axes: True where x lies inside the box."""
        x = np.asarray(x, dtype=float)
        return np.all(np.abs(x) <= np.asarray(self.bounds), axis=-1)


def eigenvalues_from_indices(indices: np.ndarray, bounds: Sequence[float]) -> np.ndarray:
    """Laplace eigenvalues sum_i (pi j_i / (2 L_i))^2 for each index row."""
    indices = np.asarray(indices, dtype=float)
    half_periods = 2.0 * np.asarray(bounds, dtype=float)
    return np.sum((np.pi * indices / half_periods) ** 2, axis=-1)


@dataclass(frozen=True)
class BasisExpansion:
    """Reduced-rank GP dictionary: M index tuples and their eigenvalues.

    Arrays are made read-only on construction, so one expansion can be shared
    between concurrent evaluators.
    """

    domain: DomainBox
    indices: np.ndarray
    eigenvalues: np.ndarray
    symmetry: SymmetryMode = SymmetryMode.NONE

    def __post_init__(self):
        indices = np.array(self.indices, dtype=int, ndmin=2)
        eigenvalues = np.array(self.eigenvalues, dtype=float, ndmin=1)
        if indices.shape[1] != self.domain.n_x:
            raise ValidationError(
                f"Index tuples have {indices.shape[1]} entries, domain has {self.domain.n_x}"
            )
        if eigenvalues.shape != (indices.shape[0],):
            raise ValidationError("One eigenvalue per index tuple is required")
        if np.any(indices < 1):
            raise ValidationError("Eigenfunction indices must be positive integers")
        if len({tuple(row) for row in indices}) != indices.shape[0]:
            raise ValidationError("Index tuples must be distinct")
        if np.any(np.diff(eigenvalues) < 0):
            raise ValidationError("Eigenvalues must be sorted non-decreasing")
        indices.setflags(write=False)
        eigenvalues.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "symmetry", SymmetryMode(self.symmetry))

    @property
    def M(self) -> int:
        return self.indices.shape[0]

    @property
    def n_x(self) -> int:
        return self.domain.n_x

    def to_dict(self) -> Dict[str, Any]:
        return {
            "domain_bounds": list(self.domain.bounds),
            "indices": self.indices.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "symmetry": self.symmetry.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BasisExpansion":
        return cls(
            domain=DomainBox(tuple(data["domain_bounds"])),
            indices=np.asarray(data["indices"], dtype=int),
            eigenvalues=np.asarray(data["eigenvalues"], dtype=float),
            symmetry=SymmetryMode(data["symmetry"]),
        )


def build_expansion(
    domain: DomainBox,
    M: int,
    max_index_per_dim: int = DEFAULT_MAX_INDEX_PER_DIM,
    symmetry: SymmetryMode = SymmetryMode.NONE,
) -> BasisExpansion:
    """Select the M admissible index tuples with the smallest eigenvalues.

    Tuples come from the grid {1..max_index_per_dim}^n_x, are filtered by the
    symmetry mode and ordered by eigenvalue, ties broken lexicographically.

    Raises:
        ConfigurationError: If fewer than M tuples are admissible
    """
    symmetry = SymmetryMode(symmetry)
    if M < 1 or max_index_per_dim < 1:
        raise ConfigurationError("M and max_index_per_dim must be positive")

    grid = itertools.product(range(1, max_index_per_dim + 1), repeat=domain.n_x)
    admissible = [index for index in grid if symmetry.admits(index)]
    if M > len(admissible):
        raise ConfigurationError(
            f"Requested M={M} eigenfunctions but only {len(admissible)} index tuples are "
            f"admissible with max_index_per_dim={max_index_per_dim} and symmetry "
            f"'{symmetry.value}' (short by {M - len(admissible)})"
        )

    eigenvalues = eigenvalues_from_indices(np.asarray(admissible), domain.bounds)
    order = sorted(range(len(admissible)), key=lambda n: (eigenvalues[n], admissible[n]))[:M]
    chosen = np.asarray([admissible[n] for n in order], dtype=int)
    return BasisExpansion(
        domain=domain,
        indices=chosen,
        eigenvalues=eigenvalues_from_indices(chosen, domain.bounds),
        symmetry=symmetry,
    )


def _phases(expansion: BasisExpansion, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (expansion.n_x,):
        raise ValidationError(
            f"State has dimension {x.shape[-1:] or 0}, expansion expects {expansion.n_x}"
        )
    L = np.asarray(expansion.domain.bounds)
    # (..., M, n_x)
    return np.pi * expansion.indices * (x[..., None, :] + L) / (2.0 * L)


def eval_basis(expansion: BasisExpansion, x: np.ndarray) -> np.ndarray:
    """Evaluate phi(x); x has shape (..., n_x), the result (..., M)."""
    L = np.asarray(expansion.domain.bounds)
    factors = np.sin(_phases(expansion, x)) / np.sqrt(L)
    return np.prod(factors, axis=-1)


def eval_basis_jacobian(expansion: BasisExpansion, x: np.ndarray) -> np.ndarray:
    """Closed-form Jacobian d phi_k / d x_i with shape (..., n_x, M)."""
    L = np.asarray(expansion.domain.bounds)
    theta = _phases(expansion, x)
    sines = np.sin(theta) / np.sqrt(L)
    slopes = (np.pi * expansion.indices / (2.0 * L)) * np.cos(theta) / np.sqrt(L)

    rows = []
    for i in range(expansion.n_x):
        factors = sines.copy()
        factors[..., i] = slopes[..., i]
        rows.append(np.prod(factors, axis=-1))
    return np.stack(rows, axis=-2)
