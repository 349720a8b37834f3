"""Ground truth for the damped non-harmonic oscillator and its datasets."""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from hamgp.hamiltonian.integrators import rollout_symplectic
from hamgp.hamiltonian.structure import SystemStructure
from hamgp.simulate.signals import InputSignal, default_training_signal, signal_from_spec
from hamgp.smc.base import ObservedData
from hamgp.utils.exceptions import ArtifactError, ConfigurationError

DEFAULT_DAMPING = 0.15


@dataclass(frozen=True)
class OscillatorTruth:
    """H(q, p) = q^2/2 + p^2/2 + 2 cos q with damping d on the momentum."""

    damping: float = DEFAULT_DAMPING

    def __post_init__(self):
        if self.damping < 0:
            raise ConfigurationError(f"Damping must be non-negative, got {self.damping}")

    @staticmethod
    def hamiltonian(x: np.ndarray) -> np.ndarray:
        """Energy at states of shape (..., 2), returned with shape (...)."""
        x = np.asarray(x, dtype=float)
        q, p = x[..., 0], x[..., 1]
        return 0.5 * q * q + 0.5 * p * p + 2.0 * np.cos(q)

    @staticmethod
    def gradient(x: np.ndarray) -> np.ndarray:
        """(dH/dq, dH/dp) at states of shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        q, p = x[..., 0], x[..., 1]
        return np.stack([q - 2.0 * np.sin(q), p], axis=-1)

    def structure(self) -> SystemStructure:
        """Canonical J, damping slot d on the momentum, force input on p."""
        return SystemStructure(
            J_pattern=[[0, 1], [-1, 0]],
            R_pattern=[[0, 0], [0, "d"]],
            G_pattern=[[0], [1]],
            hypers={"d": self.damping},
        )

    def flow(self, x: np.ndarray) -> np.ndarray:
        """Unforced flow (J - R) grad H(x)."""
        matrices = self.structure().instantiate()
        return self.gradient(x) @ (matrices.J - matrices.R).T


def true_gradient(x: np.ndarray) -> np.ndarray:
    """(q - 2 sin q, p)."""
    return OscillatorTruth.gradient(x)


class MeasurementMode(str, Enum):
    INPUT_OUTPUT = "input_output"
    INPUT_STATE = "input_state"

    @property
    def observed(self) -> Tuple[int, ...]:
        return (0,) if self is MeasurementMode.INPUT_OUTPUT else (0, 1)


@dataclass
class ScenarioConfig:
    """One simulated experiment: horizon, step, initial state, input and noise levels."""

    horizon_steps: int = 1000
    step_size_s: float = 0.02
    initial_state: Tuple[float, float] = (0.0, 0.0)
    input: Dict[str, Any] = field(default_factory=lambda: default_training_signal().to_dict())
    process_std: float = 1e-4
    measurement_std: float = 1e-3
    mode: MeasurementMode = MeasurementMode.INPUT_STATE
    seed: int = 0

    def __post_init__(self):
        self.mode = MeasurementMode(self.mode)
        self.initial_state = tuple(float(v) for v in self.initial_state)
        if isinstance(self.input, InputSignal):
            self.input = self.input.to_dict()

    def validate(self) -> bool:
        """Check ranges and that the input spec builds.

        Raises:
            ConfigurationError: If any field is out of range
        """
        if self.horizon_steps < 1:
            raise ConfigurationError(f"horizon_steps must be >= 1, got {self.horizon_steps}")
        if not self.step_size_s > 0:
            raise ConfigurationError(f"step_size_s must be positive, got {self.step_size_s}")
        if self.process_std < 0 or self.measurement_std < 0:
            raise ConfigurationError("Noise standard deviations must be non-negative")
        if len(self.initial_state) != 2:
            raise ConfigurationError(f"initial_state must have 2 entries, got {len(self.initial_state)}")
        signal_from_spec(self.input)
        return True

    @property
    def signal(self) -> InputSignal:
        return signal_from_spec(self.input)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.horizon_steps + 1) * self.step_size_s

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready form; ``from_dict(to_dict())`` rebuilds an equal scenario.

        Returns:
            Dict with every field, the mode as its string value
        """
        return {
            "horizon_steps": self.horizon_steps,
            "step_size_s": self.step_size_s,
            "initial_state": list(self.initial_state),
            "input": dict(self.input),
            "process_std": self.process_std,
            "measurement_std": self.measurement_std,
            "mode": self.mode.value,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioConfig":
        """Build a scenario from a partial mapping, defaults filling the rest.

        Args:
            data: Subset of the fields of :meth:`to_dict`

        Returns:
            The scenario (not yet validated)

        Raises:
            ConfigurationError: If ``data`` has unknown fields
        """
        known = cls().to_dict()
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigurationError(f"Unknown scenario fields: {sorted(unknown)}")
        return cls(**{**known, **data})


@dataclass(frozen=True)
class SimulatedData:
    """Time grid, inputs, measurements and (when known) the true states."""

    times: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    states: Optional[np.ndarray] = None

    @property
    def T(self) -> int:
        return self.outputs.shape[0] - 1

    def observed(self) -> ObservedData:
        return ObservedData(self.inputs, self.outputs)

    def step_size(self, rtol: float = 1e-6) -> float:
        """Sampling interval of ``times``.

        Args:
            rtol: Allowed relative spread of the individual intervals

        Returns:
            Mean interval between consecutive samples in seconds

        Raises:
            ArtifactError: If there are fewer than two samples or the grid is not uniform
        """
        intervals = np.diff(self.times)
        if intervals.size == 0:
            raise ArtifactError("A dataset needs at least two time samples to define its step size")
        step = float(intervals.mean())
        if not step > 0 or not np.allclose(intervals, step, rtol=rtol, atol=0.0):
            raise ArtifactError(
                f"Time samples must be uniformly spaced; intervals range over [{intervals.min()}, {intervals.max()}]"
            )
        return step

    def to_frame(self) -> pd.DataFrame:
        """Tabular form written by :func:`write_dataset`.

        Returns:
            Frame with t, u (u0, u1, ... for several inputs), y0, ... and x_true0, ... when states are known
        """
        columns: Dict[str, np.ndarray] = {"t": self.times}
        n_u = self.inputs.shape[1]
        for i in range(n_u):
            columns["u" if n_u == 1 else f"u{i}"] = self.inputs[:, i]
        for i in range(self.outputs.shape[1]):
            columns[f"y{i}"] = self.outputs[:, i]
        if self.states is not None:
            for i in range(self.states.shape[1]):
                columns[f"x_true{i}"] = self.states[:, i]
        return pd.DataFrame(columns)


def generate_data(scenario: ScenarioConfig, truth: OscillatorTruth, rng: np.random.Generator) -> SimulatedData:
    """Simulate with momentum-first symplectic Euler plus additive noise.

    Process noise (T x 2) is drawn before measurement noise ((T+1) x 2); both
    modes take the same draws, so the q-channel agrees across modes.
    """
    scenario.validate()
    T = scenario.horizon_steps
    times = scenario.times
    inputs = scenario.signal(times)[:, None]
    process_noise = scenario.process_std * rng.standard_normal((T, 2))
    measurement_noise = scenario.measurement_std * rng.standard_normal((T + 1, 2))

    states = rollout_symplectic(
        truth.gradient, truth.structure(), np.asarray(scenario.initial_state), inputs,
        scenario.step_size_s, process_noise,
    )
    observed = list(scenario.mode.observed)
    outputs = states[:, observed] + measurement_noise[:, observed]
    logger.debug(
        f"Simulated {T} steps in mode {scenario.mode.value}: "
        f"|q| <= {np.abs(states[:, 0]).max():.2f}, |p| <= {np.abs(states[:, 1]).max():.2f}"
    )
    return SimulatedData(times, inputs, outputs, states)


def write_dataset(data: SimulatedData, path: Union[str, Path]) -> Path:
    """Write a dataset as CSV, creating parent directories.

    Args:
        data: Dataset to write
        path: Destination CSV

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data.to_frame().to_csv(path, index=False, float_format="%.17g")
    return path


def _indexed_columns(frame: pd.DataFrame, prefix: str) -> List[str]:
    """Columns named ``<prefix><int>`` ordered by their integer suffix."""
    n = len(prefix)
    matching = [c for c in frame.columns if c.startswith(prefix) and c[n:].isdigit()]
    return sorted(matching, key=lambda c: int(c[n:]))


def read_dataset(path: Union[str, Path]) -> SimulatedData:
    """Load a CSV with columns t, u (or u0, u1, ...), y0, ..., and optional x_true0, ...

    Indexed columns are ordered numerically, so u10 follows u9.

    Args:
        path: CSV written by :func:`write_dataset` or of the same shape

    Returns:
        The dataset; ``states`` is None when no x_true columns are present

    Raises:
        ArtifactError: If the file is missing or lacks the required columns
    """
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"Dataset not found: {path}")
    frame = pd.read_csv(path)
    input_columns = ["u"] if "u" in frame.columns else _indexed_columns(frame, "u")
    output_columns = _indexed_columns(frame, "y")
    state_columns = _indexed_columns(frame, "x_true")
    if "t" not in frame.columns or not input_columns or not output_columns:
        raise ArtifactError(f"Dataset {path} needs columns t, u and y0 (found {list(frame.columns)})")
    return SimulatedData(
        times=frame["t"].to_numpy(dtype=float),
        inputs=frame[input_columns].to_numpy(dtype=float),
        outputs=frame[output_columns].to_numpy(dtype=float),
        states=frame[state_columns].to_numpy(dtype=float) if state_columns else None,
    )
