"""Input signal library for training and test scenarios."""

from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Type, Union

import numpy as np
import pandas as pd

from hamgp.utils.exceptions import ConfigurationError


@dataclass(frozen=True)
class InputSignal(ABC):
    """Deterministic scalar input u(t); zero from ``stop_s`` onward when set."""

    stop_s: Optional[float] = None

    kind = ""

    @abstractmethod
    def _value(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t: Union[float, np.ndarray]) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        value = np.broadcast_to(self._value(t), t.shape).astype(float)
        if self.stop_s is not None:
            value = np.where(t >= self.stop_s, 0.0, value)
        return value

    def to_dict(self) -> Dict[str, Any]:
        data = {"kind": self.kind}
        data.update({k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()})
        return data


@dataclass(frozen=True)
class ConstantSignal(InputSignal):
    value: float = 0.0

    kind = "constant"

    def _value(self, t):
        return np.full(t.shape, self.value)


@dataclass(frozen=True)
class PulseSignal(InputSignal):
    """Amplitude on [start_s, end_s), repeated every ``period_s`` when given."""

    amplitude: float = 1.0
    start_s: float = 0.0
    end_s: float = 1.0
    period_s: Optional[float] = None

    kind = "pulse"

    def __post_init__(self):
        if not self.end_s > self.start_s:
            raise ConfigurationError(f"Pulse needs end_s > start_s, got [{self.start_s}, {self.end_s}]")
        if self.period_s is not None and not self.period_s >= self.end_s - self.start_s:
            raise ConfigurationError("Pulse period must be at least the pulse width")

    def _value(self, t):
        offset = t - self.start_s
        if self.period_s is not None:
            offset = np.where(offset >= 0, np.mod(offset, self.period_s), offset)
        inside = (offset >= 0) & (offset < self.end_s - self.start_s)
        return np.where(inside, self.amplitude, 0.0)


@dataclass(frozen=True)
class MultisineSignal(InputSignal):
    """sum_i A_i sin(w_i t + phi_i)."""

    amplitudes: Tuple[float, ...] = (2.0, 1.5)
    frequencies_rad_s: Tuple[float, ...] = (1.0, 2.7)
    phases_rad: Tuple[float, ...] = (0.0, 0.5)

    kind = "multisine"

    def __post_init__(self):
        for name in ("amplitudes", "frequencies_rad_s", "phases_rad"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not len(self.amplitudes) == len(self.frequencies_rad_s) == len(self.phases_rad):
            raise ConfigurationError("Multisine amplitudes, frequencies and phases must have equal length")

    def _value(self, t):
        a = np.asarray(self.amplitudes)
        w = np.asarray(self.frequencies_rad_s)
        phi = np.asarray(self.phases_rad)
        return np.sum(a * np.sin(t[..., None] * w + phi), axis=-1)


@dataclass(frozen=True)
class ChirpSignal(InputSignal):
    """Linear chirp from f0 to f1 (rad/s) over ``duration_s``, continuing the sweep after."""

    amplitude: float = 1.0
    f0_rad_s: float = 0.5
    f1_rad_s: float = 3.0
    duration_s: float = 20.0

    kind = "chirp"

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigurationError(f"Chirp duration must be positive, got {self.duration_s}")

    def _value(self, t):
        rate = (self.f1_rad_s - self.f0_rad_s) / self.duration_s
        return self.amplitude * np.sin(self.f0_rad_s * t + 0.5 * rate * t * t)


@dataclass(frozen=True)
class PiecewiseLinearSignal(InputSignal):
    """Linear interpolation through (t, u) points, held constant outside them.

    Points come inline or from a CSV with columns ``t`` and ``u``.
    """

    points: Tuple[Tuple[float, float], ...] = ()
    csv_path: Optional[str] = None

    kind = "piecewise_linear"

    def __post_init__(self):
        points = self.points
        if self.csv_path is not None:
            path = Path(self.csv_path)
            if not path.exists():
                raise ConfigurationError(f"Input CSV not found: {path}")
            frame = pd.read_csv(path)
            if not {"t", "u"} <= set(frame.columns):
                raise ConfigurationError(f"Input CSV {path} needs columns 't' and 'u'")
            points = frame[["t", "u"]].to_numpy()
        points = tuple((float(t), float(u)) for t, u in points)
        if not points:
            raise ConfigurationError("Piecewise-linear signal needs at least one point")
        if any(b[0] <= a[0] for a, b in zip(points, points[1:])):
            raise ConfigurationError("Piecewise-linear times must be strictly increasing")
        object.__setattr__(self, "points", points)

    def _value(self, t):
        times, values = np.asarray(self.points).T
        return np.interp(t, times, values)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["points"] = [list(p) for p in self.points]
        return data


SIGNAL_KINDS: Dict[str, Type[InputSignal]] = {
    cls.kind: cls
    for cls in (ConstantSignal, PulseSignal, MultisineSignal, ChirpSignal, PiecewiseLinearSignal)
}


def signal_from_spec(spec: Union[InputSignal, Mapping[str, Any]]) -> InputSignal:
    """Build a signal from ``{"kind": ..., **fields}``.

    Raises:
        ConfigurationError: On an unknown kind or unknown fields
    """
    if isinstance(spec, InputSignal):
        return spec
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in SIGNAL_KINDS:
        raise ConfigurationError(f"Unknown input signal kind '{kind}'. Available: {sorted(SIGNAL_KINDS)}")
    try:
        return SIGNAL_KINDS[kind](**spec)
    except TypeError as e:
        raise ConfigurationError(f"Invalid fields for input signal '{kind}': {e}") from e


def eval_input(spec: Union[InputSignal, Mapping[str, Any]], t: Union[float, np.ndarray]) -> np.ndarray:
    """Input value(s) of the declared signal at time(s) t in seconds."""
    return signal_from_spec(spec)(t)


def default_training_signal() -> InputSignal:
    return MultisineSignal()


def default_test_signal() -> InputSignal:
    return MultisineSignal(amplitudes=(1.5, 1.0), frequencies_rad_s=(0.8, 2.1), phases_rad=(0.0, 1.0), stop_s=10.0)
