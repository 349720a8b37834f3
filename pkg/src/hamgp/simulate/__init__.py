"""Ground-truth oscillator, input signals and dataset generation."""

from hamgp.simulate.oscillator import (
    DEFAULT_DAMPING,
    MeasurementMode,
    OscillatorTruth,
    ScenarioConfig,
    SimulatedData,
    generate_data,
    read_dataset,
    true_gradient,
    write_dataset,
)
from hamgp.simulate.signals import (
    SIGNAL_KINDS,
    ChirpSignal,
    ConstantSignal,
    InputSignal,
    MultisineSignal,
    PiecewiseLinearSignal,
    PulseSignal,
    default_test_signal,
    default_training_signal,
    eval_input,
    signal_from_spec,
)

__all__ = [
    "DEFAULT_DAMPING",
    "MeasurementMode",
    "OscillatorTruth",
    "ScenarioConfig",
    "SimulatedData",
    "generate_data",
    "read_dataset",
    "write_dataset",
    "true_gradient",
    "SIGNAL_KINDS",
    "InputSignal",
    "ConstantSignal",
    "PulseSignal",
    "MultisineSignal",
    "ChirpSignal",
    "PiecewiseLinearSignal",
    "default_training_signal",
    "default_test_signal",
    "eval_input",
    "signal_from_spec",
]
