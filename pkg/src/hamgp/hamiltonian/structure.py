"""Interconnection, dissipation and input matrices with structural slots."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple, Union

import numpy as np

from hamgp.utils.exceptions import ConfigurationError, ValidationError

PatternEntry = Union[float, int, str]
Pattern = Tuple[Tuple[PatternEntry, ...], ...]

PSD_TOLERANCE = 1e-12


def _normalize_pattern(pattern: Sequence[Sequence[PatternEntry]], name: str) -> Pattern:
    rows = []
    for row in pattern:
        entries = []
        for entry in row:
            if isinstance(entry, str):
                slot = entry.strip()
                if not slot.lstrip("-"):
                    raise ConfigurationError(f"Empty slot name in {name} pattern")
                entries.append(slot)
            elif isinstance(entry, (int, float)) and not isinstance(entry, bool):
                entries.append(float(entry))
            else:
                raise ConfigurationError(f"Invalid entry {entry!r} in {name} pattern")
        rows.append(tuple(entries))
    return tuple(rows)


def _slot_name(entry: str) -> Tuple[str, float]:
    if entry.startswith("-"):
        return entry[1:], -1.0
    return entry, 1.0


class StructureMatrices(NamedTuple):
    """Numeric J, R, G for one binding of the structural hyperparameters."""

    J: np.ndarray
    R: np.ndarray
    G: np.ndarray

    def flow(self, gradient: np.ndarray, u: np.ndarray) -> np.ndarray:
        """(J - R) gradient + G u over leading axes of gradient."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return gradient @ (self.J - self.R).T + u @ self.G.T


@dataclass(frozen=True)
class SystemStructure:
    """Port-Hamiltonian structure declared as patterns of constants and slots.

    A pattern entry is a number, a slot name such as ``"d"``, or a negated
    slot ``"-d"``. ``hypers`` binds slot names to values.
    """

    J_pattern: Pattern
    R_pattern: Pattern
    G_pattern: Pattern
    hypers: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "J_pattern", _normalize_pattern(self.J_pattern, "J"))
        object.__setattr__(self, "R_pattern", _normalize_pattern(self.R_pattern, "R"))
        object.__setattr__(self, "G_pattern", _normalize_pattern(self.G_pattern, "G"))
        object.__setattr__(self, "hypers", {k: float(v) for k, v in dict(self.hypers).items()})

        n_x = len(self.J_pattern)
        if any(len(row) != n_x for row in self.J_pattern):
            raise ConfigurationError("J pattern must be square")
        if len(self.R_pattern) != n_x or any(len(row) != n_x for row in self.R_pattern):
            raise ConfigurationError("R pattern must match the shape of J")
        if len(self.G_pattern) != n_x or len({len(row) for row in self.G_pattern}) != 1:
            raise ConfigurationError("G pattern must have n_x rows of equal length")

    @property
    def n_x(self) -> int:
        return len(self.J_pattern)

    @property
    def n_u(self) -> int:
        return len(self.G_pattern[0])

    @property
    def slots(self) -> List[str]:
        """Slot names in first-appearance order over J, R, G."""
        seen: List[str] = []
        for pattern in (self.J_pattern, self.R_pattern, self.G_pattern):
            for row in pattern:
                for entry in row:
                    if isinstance(entry, str):
                        name, _ = _slot_name(entry)
                        if name not in seen:
                            seen.append(name)
        return seen

    def with_hypers(self, hypers: Mapping[str, float]) -> "SystemStructure":
        return SystemStructure(self.J_pattern, self.R_pattern, self.G_pattern, dict(hypers))

    def _fill(self, pattern: Pattern, hypers: Mapping[str, float]) -> np.ndarray:
        matrix = np.zeros((len(pattern), len(pattern[0])))
        for i, row in enumerate(pattern):
            for j, entry in enumerate(row):
                if isinstance(entry, str):
                    name, sign = _slot_name(entry)
                    if name not in hypers:
                        raise ConfigurationError(f"Structural slot '{name}' is not bound")
                    matrix[i, j] = sign * float(hypers[name])
                else:
                    matrix[i, j] = entry
        return matrix

    def _coefficient(self, pattern: Pattern, slot: str) -> np.ndarray:
        matrix = np.zeros((len(pattern), len(pattern[0])))
        for i, row in enumerate(pattern):
            for j, entry in enumerate(row):
                if isinstance(entry, str):
                    name, sign = _slot_name(entry)
                    if name == slot:
                        matrix[i, j] = sign
        return matrix

    def check_admissible(self, matrices: StructureMatrices) -> Optional[str]:
        """Return a reason string when J is not skew or R is not symmetric PSD."""
        J, R, _ = matrices
        if not np.allclose(J + J.T, 0.0, atol=PSD_TOLERANCE):
            return "J is not skew-symmetric"
        if not np.allclose(R, R.T, atol=PSD_TOLERANCE):
            return "R is not symmetric"
        smallest = float(np.min(np.linalg.eigvalsh(R))) if R.size else 0.0
        if smallest < -PSD_TOLERANCE:
            return f"R is not positive semi-definite (smallest eigenvalue {smallest:.3e})"
        return None

    def instantiate(self, hypers: Optional[Mapping[str, float]] = None) -> StructureMatrices:
        """Fill every slot and check skew-symmetry of J and PSD-ness of R.

        Raises:
            ConfigurationError: If a slot is unbound or the structure constraints fail
        """
        hypers = self.hypers if hypers is None else hypers
        matrices = StructureMatrices(
            self._fill(self.J_pattern, hypers),
            self._fill(self.R_pattern, hypers),
            self._fill(self.G_pattern, hypers),
        )
        reason = self.check_admissible(matrices)
        if reason:
            raise ConfigurationError(f"{reason} for hyperparameters {dict(hypers)}")
        return matrices

    def is_admissible(self, hypers: Mapping[str, float]) -> bool:
        try:
            self.instantiate(hypers)
        except ConfigurationError:
            return False
        return True

    def slot_derivatives(self, slot: str) -> StructureMatrices:
        """Coefficient matrices dJ/ds, dR/ds, dG/ds of one slot (patterns are linear)."""
        if slot not in self.slots:
            raise ConfigurationError(f"Unknown structural slot '{slot}'")
        return StructureMatrices(
            self._coefficient(self.J_pattern, slot),
            self._coefficient(self.R_pattern, slot),
            self._coefficient(self.G_pattern, slot),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "J": [list(row) for row in self.J_pattern],
            "R": [list(row) for row in self.R_pattern],
            "G": [list(row) for row in self.G_pattern],
            "hypers": dict(self.hypers),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SystemStructure":
        return cls(data["J"], data["R"], data["G"], data.get("hypers", {}))


@dataclass(frozen=True)
class NoiseSpec:
    """Discrete-time process covariance, measurement covariance and output selector."""

    process_cov: np.ndarray
    measurement_cov: np.ndarray
    observed: Tuple[int, ...]

    def __post_init__(self):
        process_cov = np.array(self.process_cov, dtype=float, ndmin=2)
        measurement_cov = np.array(self.measurement_cov, dtype=float, ndmin=2)
        process_cov.setflags(write=False)
        measurement_cov.setflags(write=False)
        object.__setattr__(self, "process_cov", process_cov)
        object.__setattr__(self, "measurement_cov", measurement_cov)
        object.__setattr__(self, "observed", tuple(int(i) for i in self.observed))
        self.validate()

    def validate(self) -> bool:
        n_x, n_y = self.process_cov.shape[0], len(self.observed)
        if self.process_cov.shape != (n_x, n_x):
            raise ValidationError("Process covariance must be square")
        if self.measurement_cov.shape != (n_y, n_y):
            raise ValidationError(
                f"Measurement covariance must be {n_y}x{n_y} for {n_y} observed states"
            )
        if any(i < 0 or i >= n_x for i in self.observed):
            raise ValidationError(f"Observed state indices {self.observed} out of range")
        for name, cov in (("process", self.process_cov), ("measurement", self.measurement_cov)):
            if not np.allclose(cov, cov.T):
                raise ValidationError(f"The {name} covariance must be symmetric")
        if np.min(np.linalg.eigvalsh(self.process_cov)) < -PSD_TOLERANCE:
            raise ValidationError("The process covariance must be positive semi-definite")
        if np.min(np.linalg.eigvalsh(self.measurement_cov)) <= 0:
            raise ValidationError("The measurement covariance must be positive definite")
        return True

    @property
    def n_x(self) -> int:
        return self.process_cov.shape[0]

    @property
    def n_y(self) -> int:
        return len(self.observed)

    def observe(self, x: np.ndarray) -> np.ndarray:
        """Output map g(x): selected state components."""
        return np.asarray(x)[..., list(self.observed)]

    def inflated(self, factor: float) -> "NoiseSpec":
        return NoiseSpec(self.process_cov, self.measurement_cov * factor, self.observed)

    @classmethod
    def isotropic(
        cls, n_x: int, process_std: float, measurement_std: float, observed: Sequence[int]
    ) -> "NoiseSpec":
        return cls(
            process_cov=process_std ** 2 * np.eye(n_x),
            measurement_cov=measurement_std ** 2 * np.eye(len(observed)),
            observed=tuple(observed),
        )
