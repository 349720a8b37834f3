"""Experiment configuration: JSON file sections, defaults and run-environment overrides."""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import yaml
from dotenv import load_dotenv

from hamgp.basis.expansion import DEFAULT_MAX_INDEX_PER_DIM, BasisExpansion, DomainBox, SymmetryMode, build_expansion
from hamgp.basis.spectral import KernelHyperparams
from hamgp.hamiltonian.structure import NoiseSpec, SystemStructure
from hamgp.learn.gibbs import KERNEL_NAMES, GibbsConfig, SamplerSettings
from hamgp.learn.hyperpriors import HyperPrior
from hamgp.simulate.oscillator import DEFAULT_DAMPING, MeasurementMode, OscillatorTruth, ScenarioConfig
from hamgp.simulate.signals import default_test_signal
from hamgp.utils.exceptions import ConfigurationError

STEP_SIZE_RTOL = 1e-6


def _settings_from_dict(cls, data: Optional[Mapping[str, Any]], section: str):
    data = dict(data or {})
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigurationError(f"Unknown fields in '{section}': {sorted(unknown)}")
    return cls(**data)


@dataclass
class BasisSettings:
    domain_bounds: Tuple[float, ...] = (8.0, 8.0)
    num_eigenfunctions: int = 20
    max_index_per_dim: int = DEFAULT_MAX_INDEX_PER_DIM
    symmetry: str = SymmetryMode.NONE.value

    def validate(self) -> bool:
        if self.num_eigenfunctions < 1:
            raise ConfigurationError(f"num_eigenfunctions must be >= 1, got {self.num_eigenfunctions}")
        if any(not b > 0 for b in self.domain_bounds):
            raise ConfigurationError(f"domain_bounds must be positive, got {list(self.domain_bounds)}")
        try:
            SymmetryMode(self.symmetry)
        except ValueError:
            raise ConfigurationError(
                f"Unknown symmetry '{self.symmetry}'. Use one of {[m.value for m in SymmetryMode]}"
            ) from None
        return True

    def build(self) -> BasisExpansion:
        return build_expansion(
            DomainBox(tuple(float(b) for b in self.domain_bounds)),
            self.num_eigenfunctions,
            max_index_per_dim=self.max_index_per_dim,
            symmetry=SymmetryMode(self.symmetry),
        )


@dataclass
class NoiseSettings:
    """Noise assumed by the inference model; ``observed_states`` defaults to the scenario's mode."""

    process_std: float = 1e-3
    measurement_std: float = 1e-3
    observed_states: Optional[List[int]] = None

    def validate(self) -> bool:
        if not (self.process_std > 0 and self.measurement_std > 0):
            raise ConfigurationError("Inference noise standard deviations must be positive")
        return True

    def build(self, n_x: int, mode: MeasurementMode) -> NoiseSpec:
        observed = mode.observed if self.observed_states is None else tuple(self.observed_states)
        return NoiseSpec.isotropic(n_x, self.process_std, self.measurement_std, observed)


@dataclass
class InitialStateSettings:
    """p(x_0) = N(mean, cov_scale I); mean defaults to the first measurement."""

    mean: Optional[List[float]] = None
    cov_scale: float = 0.01

    def validate(self) -> bool:
        if not self.cov_scale > 0:
            raise ConfigurationError(f"initial_state.cov_scale must be positive, got {self.cov_scale}")
        return True


def _default_hyper_prior() -> Dict[str, Dict[str, Any]]:
    return {
        "signal_variance": {"coordinate": "log", "mean": 0.0, "std": 3.0},
        "length_scale": {"coordinate": "log", "mean": 0.0, "std": 3.0},
        "d": {"coordinate": "log", "mean": -1.0, "std": 3.0},
    }


@dataclass
class PriorSettings:
    psi: float = 100.0
    nu: float = 400.0
    kernel_hypers: Dict[str, float] = field(
        default_factory=lambda: {"signal_variance": 1.0, "length_scale": 1.5}
    )
    hyper_prior: Dict[str, Dict[str, Any]] = field(default_factory=_default_hyper_prior)

    def validate(self) -> bool:
        if not (self.psi > 0 and self.nu > 0):
            raise ConfigurationError(f"NIG psi and nu must be positive, got {self.psi}, {self.nu}")
        self.build_kernel_hypers()
        self.build_hyper_prior()
        return True

    def build_kernel_hypers(self) -> KernelHyperparams:
        missing = [n for n in KERNEL_NAMES if n not in self.kernel_hypers]
        if missing:
            raise ConfigurationError(f"priors.kernel_hypers is missing {missing}")
        return KernelHyperparams.from_dict(self.kernel_hypers)

    def build_hyper_prior(self) -> HyperPrior:
        try:
            return HyperPrior.from_dict(self.hyper_prior)
        except (KeyError, ValueError, TypeError) as e:
            raise ConfigurationError(f"Invalid priors.hyper_prior entry: {e}") from e


@dataclass
class EvaluationSettings:
    grid_min: float = -2.5
    grid_max: float = 2.5
    grid_points: int = 21
    num_samples: int = 10
    energy_tolerance: float = 1e-6

    def validate(self) -> bool:
        if not self.grid_max > self.grid_min:
            raise ConfigurationError("evaluation.grid_max must exceed grid_min")
        if self.grid_points < 2:
            raise ConfigurationError("evaluation.grid_points must be >= 2")
        if self.num_samples < 0:
            raise ConfigurationError("evaluation.num_samples must be non-negative")
        return True


def _default_structure() -> Dict[str, Any]:
    structure = OscillatorTruth().structure().to_dict()
    structure["hypers"] = {"d": 0.5}
    return structure


def _default_test_scenario() -> ScenarioConfig:
    return ScenarioConfig(
        horizon_steps=2000,
        step_size_s=0.01,
        initial_state=(-0.1, 0.5),
        input=default_test_signal().to_dict(),
        process_std=0.0,
        measurement_std=0.0,
    )


@dataclass
class ExperimentConfig:
    """Complete, serializable description of one learning experiment."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    test_scenario: ScenarioConfig = field(default_factory=_default_test_scenario)
    true_damping: float = DEFAULT_DAMPING
    basis: BasisSettings = field(default_factory=BasisSettings)
    structure: Dict[str, Any] = field(default_factory=_default_structure)
    noise: NoiseSettings = field(default_factory=NoiseSettings)
    initial_state: InitialStateSettings = field(default_factory=InitialStateSettings)
    priors: PriorSettings = field(default_factory=PriorSettings)
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)
    output_dir: Optional[str] = None
    data_path: Optional[str] = None

    def validate(self) -> bool:
        """Validate every section and cross-section references.

        Raises:
            ConfigurationError: On the first invalid field
        """
        self.scenario.validate()
        self.test_scenario.validate()
        self.basis.validate()
        self.noise.validate()
        self.initial_state.validate()
        self.priors.validate()
        self.sampler.validate()
        self.evaluation.validate()
        structure = self.build_structure()
        hyper_prior = self.priors.build_hyper_prior()
        without_prior = [s for s in structure.slots if s not in hyper_prior]
        if without_prior:
            raise ConfigurationError(f"Structural slots without a hyper-prior: {without_prior}")
        without_value = [s for s in structure.slots if s not in structure.hypers]
        if without_value:
            raise ConfigurationError(f"Structural slots without an initial value: {without_value}")
        structure.instantiate()
        if len(self.basis.domain_bounds) != structure.n_x:
            raise ConfigurationError(
                f"basis.domain_bounds has {len(self.basis.domain_bounds)} entries for {structure.n_x} states"
            )
        if self.initial_state.mean is not None and len(self.initial_state.mean) != structure.n_x:
            raise ConfigurationError("initial_state.mean must have one entry per state")
        if self.data_path is None:
            self.check_step_size(self.scenario.step_size_s, "scenario.step_size_s")
        self.build_expansion()
        return True

    def check_step_size(self, data_step_s: float, source: str) -> None:
        """Require the inference Euler step to match the sampling interval of the data.

        Args:
            data_step_s: Time between consecutive measurements
            source: Where ``data_step_s`` came from, for the error message

        Raises:
            ConfigurationError: If the two steps differ beyond ``STEP_SIZE_RTOL``
        """
        if not np.isclose(data_step_s, self.sampler.euler_step_s, rtol=STEP_SIZE_RTOL, atol=0.0):
            raise ConfigurationError(
                f"sampler.euler_step_s = {self.sampler.euler_step_s} does not match {source} = {data_step_s}"
            )

    def build_structure(self) -> SystemStructure:
        try:
            return SystemStructure.from_dict(self.structure)
        except KeyError as e:
            raise ConfigurationError(f"structure is missing {e}") from e

    def build_expansion(self) -> BasisExpansion:
        return self.basis.build()

    def build_noise(self) -> NoiseSpec:
        return self.noise.build(self.build_structure().n_x, self.scenario.mode)

    def truth(self) -> OscillatorTruth:
        return OscillatorTruth(self.true_damping)

    def gibbs_config(self) -> GibbsConfig:
        structure = self.build_structure()
        n_x = structure.n_x
        return GibbsConfig(
            expansion=self.build_expansion(),
            structure=structure,
            noise=self.build_noise(),
            psi=self.priors.psi,
            nu=self.priors.nu,
            hyper_prior=self.priors.build_hyper_prior(),
            kernel_hypers=self.priors.build_kernel_hypers(),
            sampler=self.sampler,
            initial_mean=None if self.initial_state.mean is None else np.asarray(self.initial_state.mean, float),
            initial_cov=self.initial_state.cov_scale * np.eye(n_x),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario.to_dict(),
            "test_scenario": self.test_scenario.to_dict(),
            "true_damping": self.true_damping,
            "basis": {**asdict(self.basis), "domain_bounds": list(self.basis.domain_bounds)},
            "structure": json.loads(json.dumps(self.structure)),
            "noise": asdict(self.noise),
            "initial_state": asdict(self.initial_state),
            "priors": asdict(self.priors),
            "sampler": asdict(self.sampler),
            "evaluation": asdict(self.evaluation),
            "output_dir": self.output_dir,
            "data_path": self.data_path,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown config sections: {sorted(unknown)}")
        defaults = cls()
        basis = _settings_from_dict(BasisSettings, data.get("basis"), "basis")
        basis.domain_bounds = tuple(basis.domain_bounds)
        return cls(
            scenario=ScenarioConfig.from_dict(data.get("scenario", {})),
            test_scenario=ScenarioConfig.from_dict(
                {**defaults.test_scenario.to_dict(), **data.get("test_scenario", {})}
            ),
            true_damping=float(data.get("true_damping", DEFAULT_DAMPING)),
            basis=basis,
            structure=dict(data.get("structure", defaults.structure)),
            noise=_settings_from_dict(NoiseSettings, data.get("noise"), "noise"),
            initial_state=_settings_from_dict(InitialStateSettings, data.get("initial_state"), "initial_state"),
            priors=_settings_from_dict(PriorSettings, data.get("priors"), "priors"),
            sampler=_settings_from_dict(SamplerSettings, data.get("sampler"), "sampler"),
            evaluation=_settings_from_dict(EvaluationSettings, data.get("evaluation"), "evaluation"),
            output_dir=data.get("output_dir"),
            data_path=data.get("data_path"),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of the effective config."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an experiment config file.

    Raises:
        ConfigurationError: If the file is missing, unparsable or invalid
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigurationError(f"Config file not found: {config_path}")
    with open(config_path, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Cannot parse {config_path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {config_path} must contain an object")
    config = ExperimentConfig.from_dict(data)
    config.validate()
    return config


class RunEnvironment:
    """Run settings outside the science: output directory and log level.

    Precedence: CLI option > config file > environment (.env) > default.
    """

    DEFAULT_OUTPUT_DIR = "runs/default"
    DEFAULT_LOG_LEVEL = "INFO"

    def __init__(self, env_file: Optional[str] = None):
        if env_file:
            load_dotenv(env_file)
        else:
            load_dotenv(dotenv_path=self._find_dotenv())

    @staticmethod
    def _find_dotenv() -> Optional[Path]:
        current = Path.cwd()
        while current != current.parent:
            env_path = current / ".env"
            if env_path.exists():
                return env_path
            current = current.parent
        return None

    @staticmethod
    def get(key: str, cli_value: Optional[str] = None, config_value: Optional[str] = None,
            default: Optional[str] = None) -> Optional[str]:
        if cli_value is not None:
            return cli_value
        if config_value is not None:
            return str(config_value)
        env_value = os.getenv(key)
        if env_value is not None:
            return env_value
        return default

    def output_dir(self, cli_value: Optional[str], config: ExperimentConfig) -> Path:
        return Path(self.get("HAMGP_OUTPUT_DIR", cli_value, config.output_dir, self.DEFAULT_OUTPUT_DIR))

    def log_level(self, cli_value: Optional[str] = None) -> str:
        return self.get("HAMGP_LOG_LEVEL", cli_value, None, self.DEFAULT_LOG_LEVEL).upper()
