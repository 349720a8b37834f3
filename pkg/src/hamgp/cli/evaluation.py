"""Posterior summaries: flow maps, forward-prediction ensembles and chain diagnostics."""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from hamgp.basis.expansion import BasisExpansion
from hamgp.hamiltonian.integrators import rollout_symplectic
from hamgp.hamiltonian.model import predict_gradient, predict_hamiltonian
from hamgp.hamiltonian.params import GPParams
from hamgp.hamiltonian.structure import SystemStructure
from hamgp.learn.gibbs import KERNEL_NAMES, ChainSample
from hamgp.simulate.oscillator import ScenarioConfig
from hamgp.utils.exceptions import ArtifactError, ConfigurationError

ZERO_FLOW_THRESHOLD = 1e-6
HISTOGRAM_BINS = 20
MEAN_MODEL = "mean"


@dataclass(frozen=True)
class PosteriorModel:
    """One (theta, structural hyperparameters) pair used for prediction."""

    name: str
    params: GPParams
    structural_hypers: Dict[str, float]


def mean_model(samples: Sequence[ChainSample]) -> PosteriorModel:
    """Arithmetic mean of the weights, sigma^2 and structural hyperparameters."""
    if not samples:
        raise ArtifactError("Cannot build a mean model from an empty chain")
    weights = np.mean([s.params.weights for s in samples], axis=0)
    noise_variance = float(np.mean([s.params.noise_variance for s in samples]))
    slots = samples[0].structural_hypers.keys()
    hypers = {k: float(np.mean([s.structural_hypers[k] for s in samples])) for k in slots}
    return PosteriorModel(MEAN_MODEL, GPParams(weights, noise_variance), hypers)


@dataclass(frozen=True)
class FlowMapReport:
    """Per-cell true and estimated flows on a square grid, with RMSE summaries."""

    grid_min: float
    grid_max: float
    grid_points: int
    cells: pd.DataFrame
    magnitude_rmse: float
    angle_rmse: float
    excluded_cells: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid": {"min": self.grid_min, "max": self.grid_max, "points": self.grid_points},
            "magnitude_rmse": self.magnitude_rmse,
            "angle_rmse": self.angle_rmse,
            "excluded_cells": self.excluded_cells,
            "num_cells": len(self.cells),
        }


def flow_errors(true_flow: np.ndarray, estimated_flow: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Magnitude differences and angles in [0, pi] between paired 2D vectors."""
    magnitude = np.linalg.norm(estimated_flow, axis=-1) - np.linalg.norm(true_flow, axis=-1)
    cross = true_flow[..., 0] * estimated_flow[..., 1] - true_flow[..., 1] * estimated_flow[..., 0]
    dot = np.sum(true_flow * estimated_flow, axis=-1)
    return magnitude, np.abs(np.arctan2(cross, dot))


def rmse_from_cells(cells: pd.DataFrame) -> Tuple[float, float]:
    magnitude_rmse = float(np.sqrt(np.mean(cells["magnitude_error"].to_numpy() ** 2)))
    included = cells.loc[cells["angle_included"].astype(bool), "angle_error"].to_numpy()
    angle_rmse = float(np.sqrt(np.mean(included ** 2))) if included.size else 0.0
    return magnitude_rmse, angle_rmse


def evaluate_flow_map(
    estimated_flow: Callable[[np.ndarray], np.ndarray],
    true_flow: Callable[[np.ndarray], np.ndarray],
    grid_min: float = -2.5,
    grid_max: float = 2.5,
    grid_points: int = 21,
) -> FlowMapReport:
    """Compare two unforced flow fields over a uniform (q, p) grid.

    Cells whose true flow magnitude is below ``ZERO_FLOW_THRESHOLD`` are left
    out of the angle RMSE.
    """
    axis = np.linspace(grid_min, grid_max, grid_points)
    q, p = np.meshgrid(axis, axis, indexing="ij")
    x = np.stack([q.ravel(), p.ravel()], axis=-1)
    v_true = true_flow(x)
    v_est = estimated_flow(x)
    magnitude_error, angle_error = flow_errors(v_true, v_est)
    included = np.linalg.norm(v_true, axis=-1) >= ZERO_FLOW_THRESHOLD

    cells = pd.DataFrame({
        "q": x[:, 0],
        "p": x[:, 1],
        "true_v0": v_true[:, 0],
        "true_v1": v_true[:, 1],
        "est_v0": v_est[:, 0],
        "est_v1": v_est[:, 1],
        "magnitude_error": magnitude_error,
        "angle_error": angle_error,
        "angle_included": included.astype(int),
    })
    excluded = int(np.count_nonzero(~included))
    logger.info(f"Flow map: {excluded} of {len(cells)} cells excluded from the angle RMSE")
    magnitude_rmse, angle_rmse = rmse_from_cells(cells)
    return FlowMapReport(grid_min, grid_max, grid_points, cells, magnitude_rmse, angle_rmse, excluded)


def model_flow(expansion: BasisExpansion, structure: SystemStructure, model: PosteriorModel):
    matrices = structure.instantiate(model.structural_hypers or structure.hypers)

    def flow(x: np.ndarray) -> np.ndarray:
        return predict_gradient(expansion, model.params, x) @ (matrices.J - matrices.R).T

    return flow


def input_stop_index(inputs: np.ndarray) -> int:
    """First index after which every input is exactly zero (len(inputs) if never)."""
    nonzero = np.flatnonzero(np.any(np.asarray(inputs).reshape(len(inputs), -1) != 0.0, axis=1))
    return 0 if nonzero.size == 0 else int(nonzero[-1]) + 1


def energy_violations(energy: np.ndarray, start: int, tolerance: float) -> int:
    """Steps from ``start`` on where the energy rises by more than ``tolerance``."""
    return int(np.count_nonzero(np.diff(energy[start:]) > tolerance))


def forecast_trajectory(
    name: str,
    gradient: Callable[[np.ndarray], np.ndarray],
    hamiltonian: Callable[[np.ndarray], np.ndarray],
    structure: SystemStructure,
    scenario: ScenarioConfig,
    energy_tolerance: float = 1e-6,
) -> Tuple[pd.DataFrame, int]:
    """Noiseless symplectic rollout of one model over a scenario.

    Args:
        name: Model label written to the ``model`` column
        gradient: Hamiltonian gradient, shape (..., n_x) -> (..., n_x)
        hamiltonian: Hamiltonian values, shape (..., n_x) -> (...)
        structure: Structure with the model's hyperparameters bound
        scenario: Initial state, time grid and input of the forecast
        energy_tolerance: Per-step energy rise tolerated after the input stops

    Returns:
        Tuple of (frame with model, t, u, q, p, H columns; energy violations)
    """
    times = scenario.times
    inputs = scenario.signal(times)[:, None]
    states = rollout_symplectic(gradient, structure, np.asarray(scenario.initial_state), inputs, scenario.step_size_s)
    energy = hamiltonian(states)
    frame = pd.DataFrame({
        "model": name,
        "t": times,
        "u": inputs[:, 0],
        "q": states[:, 0],
        "p": states[:, 1],
        "H": energy,
    })
    return frame, energy_violations(energy, input_stop_index(inputs), energy_tolerance)


def predict_ensemble(
    expansion: BasisExpansion,
    structure: SystemStructure,
    samples: Sequence[ChainSample],
    scenario: ScenarioConfig,
    n_samples: int,
    rng: np.random.Generator,
    energy_tolerance: float = 1e-6,
) -> Tuple[pd.DataFrame, Dict[str, int]]:
    """Forward-simulate the mean model and ``n_samples`` random retained models.

    Returns:
        Tuple of (long-format frame with model, t, u, q, p, H columns;
        energy violations per model after the input has stopped)

    Raises:
        ArtifactError: If fewer than ``n_samples`` samples are retained
    """
    if len(samples) < n_samples:
        raise ArtifactError(f"Requested {n_samples} posterior samples but only {len(samples)} are retained")
    picks = np.sort(rng.choice(len(samples), size=n_samples, replace=False)) if n_samples else []
    models = [mean_model(samples)] + [
        PosteriorModel(f"sample_{i}", samples[j].params, samples[j].structural_hypers)
        for i, j in enumerate(picks)
    ]

    frames: List[pd.DataFrame] = []
    violations: Dict[str, int] = {}
    for model in models:
        frame, violations[model.name] = forecast_trajectory(
            model.name,
            lambda x, params=model.params: predict_gradient(expansion, params, x),
            lambda x, params=model.params: predict_hamiltonian(expansion, params, x),
            structure.with_hypers(model.structural_hypers or structure.hypers),
            scenario,
            energy_tolerance,
        )
        frames.append(frame)
    total = sum(violations.values())
    if total:
        logger.warning(f"Energy increased after the input stopped in {total} steps across {len(models)} models")
    return pd.concat(frames, ignore_index=True), violations


def _summary(values: np.ndarray) -> Dict[str, float]:
    q05, q50, q95 = np.quantile(values, [0.05, 0.5, 0.95])
    return {
        "mean": float(np.mean(values)),
        "std": float(np.std(values)),
        "q05": float(q05),
        "q50": float(q50),
        "q95": float(q95),
    }


def _histogram(values: np.ndarray) -> Dict[str, List[float]]:
    counts, edges = np.histogram(values, bins=HISTOGRAM_BINS, density=True)
    return {"density": counts.tolist(), "edges": edges.tolist()}


def traces(samples: Sequence[ChainSample]) -> Dict[str, np.ndarray]:
    series = {name: np.array([getattr(s.kernel_hypers, name) for s in samples]) for name in KERNEL_NAMES}
    for slot in samples[0].structural_hypers if samples else ():
        series[slot] = np.array([s.structural_hypers[slot] for s in samples])
    series["noise_variance"] = np.array([s.params.noise_variance for s in samples])
    return series


def diagnose_chain(chain: Sequence[ChainSample], burn_in: int = 0) -> Dict[str, Any]:
    """Acceptance rates, trace summaries and density histograms of a chain.

    Acceptance rates cover every record; traces and histograms only those past ``burn_in``.

    Raises:
        ArtifactError: If the chain is empty or burn-in discards every record
    """
    if not chain:
        raise ArtifactError("Chain is empty")
    blocks = sorted({block for s in chain for block in s.accepted})
    acceptance = {b: float(np.mean([bool(s.accepted.get(b, False)) for s in chain])) for b in blocks}
    retained = [s for s in chain if s.iteration > burn_in]
    if not retained:
        raise ArtifactError(f"Burn-in of {burn_in} iterations leaves no records out of {len(chain)}")
    report: Dict[str, Any] = {
        "num_records": len(chain),
        "num_retained": len(retained),
        "burn_in": burn_in,
        "acceptance_rates": acceptance,
        "traces": {name: _summary(v) for name, v in traces(retained).items()},
        "histograms": {name: _histogram(v) for name, v in traces(retained).items()},
    }
    ess = [s.diagnostics["mean_ess"] for s in chain if "mean_ess" in s.diagnostics]
    if ess:
        report["mean_ess"] = float(np.mean(ess))
    return report


def posterior_interval(samples: Sequence[ChainSample], slot: str, level: Tuple[float, float] = (0.05, 0.95)) -> Tuple[float, float]:
    values = np.array([s.structural_hypers[slot] for s in samples])
    low, high = np.quantile(values, level)
    return float(low), float(high)


def _trajectory_columns(frame: pd.DataFrame) -> List[str]:
    return [c for c in frame.columns if c[:1] in ("x", "h") and c[1:].isdigit()]


def summarize_states(
    trajectories: pd.DataFrame, burn_in: int = 0, level: Tuple[float, float] = (0.05, 0.95)
) -> pd.DataFrame:
    """Per-time posterior mean and quantile band of the sampled state trajectories.

    Args:
        trajectories: Frame from :func:`hamgp.learn.artifacts.read_trajectories`
            with columns k, t, x0, ..., h0, ...
        burn_in: Trajectories of iterations up to this index are discarded
        level: Lower and upper quantile of the band

    Returns:
        One row per time index with ``num_samples`` and, for every x and h
        column, ``<col>_mean``, ``<col>_low`` and ``<col>_high``

    Raises:
        ConfigurationError: If ``level`` is not an increasing pair inside [0, 1]
        ArtifactError: If the frame has no state columns or burn-in discards every trajectory
    """
    low_q, high_q = level
    if not 0.0 <= low_q < high_q <= 1.0:
        raise ConfigurationError(f"Quantile band must satisfy 0 <= low < high <= 1, got {level}")
    columns = _trajectory_columns(trajectories)
    if not columns or not {"k", "t"} <= set(trajectories.columns):
        raise ArtifactError(f"Trajectories need columns k, t and x0 (found {list(trajectories.columns)})")
    retained = trajectories[trajectories["k"] > burn_in]
    if retained.empty:
        raise ArtifactError(f"No stored trajectories past burn-in {burn_in}")

    grouped = retained.groupby("t")[columns]
    parts = {
        "mean": grouped.mean(),
        "low": grouped.quantile(low_q),
        "high": grouped.quantile(high_q),
    }
    summary = pd.DataFrame({"num_samples": grouped.size()})
    for column in columns:
        for stat, values in parts.items():
            summary[f"{column}_{stat}"] = values[column]
    logger.debug(f"Summarized {retained['k'].nunique()} trajectories over {len(summary)} time steps")
    return summary.reset_index()
