"""Helpers shared by the hamgp commands."""

import json
import platform
from pathlib import Path
from typing import Any, Dict, Optional

import click
import numpy as np
import scipy

from hamgp import __version__
from hamgp.cli.config import ExperimentConfig
from hamgp.simulate.oscillator import SimulatedData, generate_data, read_dataset, write_dataset
from hamgp.utils.exceptions import (
    ArtifactError,
    ChainAbortedError,
    ConfigurationError,
    HamGPError,
    NumericalError,
    ValidationError,
)

MANIFEST_NAME = "manifest.json"
CHAIN_NAME = "chain.jsonl"
TRAJECTORIES_NAME = "trajectories.csv"
DATASET_NAME = "dataset.csv"
MEAN_MODEL_NOTE = "arithmetic mean of weights, noise variance and structural hyperparameters over retained samples"

_ERROR_KINDS = (
    (ConfigurationError, "Configuration error"),
    (ValidationError, "Validation error"),
    (ChainAbortedError, "Chain aborted"),
    (NumericalError, "Numerical error"),
    (ArtifactError, "Artifact error"),
    (HamGPError, "Error"),
)


def report_error(error: Exception, verbose: bool) -> None:
    """Print a colored one-line error and abort; re-raise unexpected errors when verbose."""
    for kind, label in _ERROR_KINDS:
        if isinstance(error, kind):
            click.echo(click.style(f"✗ {label}: {error}", fg="red"), err=True)
            if verbose:
                raise error
            raise click.Abort()
    click.echo(click.style(f"✗ Unexpected error: {error}", fg="red"), err=True)
    if verbose:
        raise error
    raise click.Abort()


def load_or_generate(config: ExperimentConfig, output_dir: Optional[Path] = None) -> SimulatedData:
    """External dataset when ``data_path`` is set, else simulate the training scenario.

    Raises:
        ConfigurationError: If the dataset's time spacing differs from ``sampler.euler_step_s``
        ArtifactError: If the dataset cannot be read or its time grid is not uniform
    """
    if config.data_path:
        data = read_dataset(config.data_path)
        config.check_step_size(data.step_size(), f"the time spacing of {config.data_path}")
        return data
    data = generate_data(config.scenario, config.truth(), np.random.default_rng(config.scenario.seed))
    if output_dir is not None:
        write_dataset(data, output_dir / DATASET_NAME)
    return data


def versions() -> Dict[str, str]:
    return {
        "hamgp": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_manifest(output_dir: Path, config: ExperimentConfig, status: str, **extra: Any) -> Path:
    manifest = {
        "status": status,
        "versions": versions(),
        "config_sha256": config.config_hash(),
        "seed": config.sampler.seed,
        "mean_model": MEAN_MODEL_NOTE,
        "config": config.to_dict(),
        **extra,
    }
    path = output_dir / MANIFEST_NAME
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return path


def write_json(path: Path, data: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
    return path
