"""End-to-end tests of the hamgp command line on a tiny experiment."""

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner
from loguru import logger

from hamgp.basis.spectral import KernelHyperparams
from hamgp.cli.commands.common import load_or_generate
from hamgp.cli.config import ExperimentConfig, RunEnvironment, load_config
from hamgp.cli.evaluation import (
    diagnose_chain,
    evaluate_flow_map,
    forecast_trajectory,
    mean_model,
    rmse_from_cells,
    summarize_states,
)
from hamgp.cli.main import cli
from hamgp.hamiltonian.integrators import rollout_symplectic
from hamgp.hamiltonian.model import predict_gradient
from hamgp.hamiltonian.params import GPParams
from hamgp.learn import read_chain
from hamgp.learn.artifacts import ChainWriter
from hamgp.learn.gibbs import ChainSample
from hamgp.simulate import OscillatorTruth
from hamgp.simulate.oscillator import generate_data
from hamgp.utils.exceptions import ArtifactError, ConfigurationError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

TINY_CONFIG = {
    "scenario": {"horizon_steps": 20, "step_size_s": 0.02, "seed": 1},
    "test_scenario": {"horizon_steps": 100},
    "basis": {"domain_bounds": [8.0, 8.0], "num_eigenfunctions": 6},
    "sampler": {"iterations": 4, "burn_in": 1, "num_particles": 5, "seed": 7, "trajectory_stride": 2},
    "evaluation": {"num_samples": 2, "grid_points": 5},
}


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    logger.remove()


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("config") / "tiny.json"
    path.write_text(json.dumps(TINY_CONFIG))
    return path


@pytest.fixture(scope="module")
def trained(config_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    result = CliRunner().invoke(cli, ["train", "-c", str(config_path), "-o", str(out), "--no-progress"])
    logger.remove()
    assert result.exit_code == 0, result.output
    return out


def invoke(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


class TestConfigCommands:
    def test_init_prints_loadable_defaults(self):
        result = invoke("config", "init")
        assert result.exit_code == 0
        data = json.loads(result.output)
        assert ExperimentConfig.from_dict(data).to_dict() == data

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"sampler": {"iterations": 2, "burn_in": 0}, "plotting": {}}))
        result = invoke("train", "-c", path, "-o", tmp_path / "out")
        assert result.exit_code == 1
        assert "Configuration error" in result.output

    def test_slot_without_hyper_prior(self):
        config = ExperimentConfig()
        config.structure = {"J": [[0, "k"], ["-k", 0]], "R": [[0, 0], [0, "d"]], "G": [[0], [1]],
                            "hypers": {"k": 1.0, "d": 0.5}}
        with pytest.raises(ConfigurationError, match="k"):
            config.validate()

    def test_hash_ignores_key_order(self, config_path):
        config = load_config(config_path)
        reordered = ExperimentConfig.from_dict(dict(reversed(list(config.to_dict().items()))))
        assert reordered.config_hash() == config.config_hash()

    def test_euler_step_must_match_scenario_step(self):
        config = ExperimentConfig.from_dict({**TINY_CONFIG, "scenario": {**TINY_CONFIG["scenario"], "step_size_s": 0.01}})
        with pytest.raises(ConfigurationError, match="euler_step_s"):
            config.validate()

    def test_euler_step_must_match_dataset_spacing(self, tmp_path):
        dataset = tmp_path / "external.csv"
        dataset.write_text("t,u,y0,y1\n0,0,0,0\n0.01,0,0,0\n0.02,0,0,0\n")
        config = ExperimentConfig.from_dict({**TINY_CONFIG, "data_path": str(dataset)})
        config.validate()
        with pytest.raises(ConfigurationError, match="time spacing"):
            load_or_generate(config)

        path = tmp_path / "external.json"
        path.write_text(json.dumps(config.to_dict()))
        result = invoke("train", "-c", path, "-o", tmp_path / "out", "--no-progress")
        assert result.exit_code == 1
        assert "Configuration error" in result.output

    def test_matching_dataset_spacing_loads(self, tmp_path):
        dataset = tmp_path / "external.csv"
        dataset.write_text("t,u,y0,y1\n0,0,0,0\n0.02,0,0,0\n0.04,0,0,0\n")
        config = ExperimentConfig.from_dict({**TINY_CONFIG, "data_path": str(dataset)})
        assert load_or_generate(config).T == 2

    @pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
    def test_shipped_configs_validate(self, path):
        config = load_config(path)
        assert config.validate()
        assert config.build_expansion().M == config.basis.num_eigenfunctions

    def test_input_output_configs_differ_only_in_symmetry(self):
        with_symmetry = load_config(CONFIG_DIR / "oscillator_input_output.json")
        without = load_config(CONFIG_DIR / "oscillator_input_output_nosym.json")
        assert without.scenario.mode.value == "input_output"
        assert (with_symmetry.basis.symmetry, without.basis.symmetry) == ("antisymmetric", "none")
        assert (with_symmetry.basis.num_eigenfunctions, without.basis.num_eigenfunctions) == (15, 20)
        assert without.scenario.to_dict() == with_symmetry.scenario.to_dict()
        assert without.sampler == with_symmetry.sampler


class TestRunEnvironment:
    def test_precedence(self, monkeypatch):
        monkeypatch.setenv("HAMGP_OUTPUT_DIR", "from_env")
        assert RunEnvironment.get("HAMGP_OUTPUT_DIR", "from_cli", "from_config", "default") == "from_cli"
        assert RunEnvironment.get("HAMGP_OUTPUT_DIR", None, "from_config", "default") == "from_config"
        assert RunEnvironment.get("HAMGP_OUTPUT_DIR", None, None, "default") == "from_env"
        monkeypatch.delenv("HAMGP_OUTPUT_DIR")
        assert RunEnvironment.get("HAMGP_OUTPUT_DIR", None, None, "default") == "default"


class TestSimulateCommand:
    def test_writes_dataset(self, config_path, tmp_path):
        output = tmp_path / "train.csv"
        result = invoke("simulate", "-c", config_path, "-o", output)
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(output)
        assert len(frame) == 21
        assert list(frame.columns) == ["t", "u", "y0", "y1", "x_true0", "x_true1"]


class TestTrainCommand:
    def test_artifacts(self, trained):
        names = {p.name for p in trained.iterdir()}
        assert {"chain.jsonl", "trajectories.csv", "dataset.csv", "manifest.json", "run.log"} <= names
        assert len(read_chain(trained / "chain.jsonl")) == 4
        frame = pd.read_csv(trained / "trajectories.csv")
        assert sorted(frame["k"].unique()) == [2, 4]

    def test_manifest_reproduces_config(self, trained, config_path):
        manifest = json.loads((trained / "manifest.json").read_text())
        assert manifest["status"] == "completed"
        assert manifest["chain_records"] == 4
        assert manifest["seed"] == 7
        assert manifest["config_sha256"] == load_config(config_path).config_hash()
        assert ExperimentConfig.from_dict(manifest["config"]).config_hash() == manifest["config_sha256"]

    def test_rerun_is_byte_identical(self, trained, config_path, tmp_path):
        result = invoke("train", "-c", config_path, "-o", tmp_path, "--no-progress")
        assert result.exit_code == 0, result.output
        for name in ("chain.jsonl", "trajectories.csv", "manifest.json"):
            assert (tmp_path / name).read_bytes() == (trained / name).read_bytes()


class TestEvaluationCommands:
    def test_flowmap_report_matches_cells(self, trained, config_path):
        result = invoke("eval-flowmap", "-c", config_path, "--chain", trained / "chain.jsonl")
        assert result.exit_code == 0, result.output
        report = json.loads((trained / "flowmap.json").read_text())
        cells = pd.read_csv(trained / report["cells_file"])
        assert len(cells) == 25
        magnitude, angle = rmse_from_cells(cells)
        assert magnitude == pytest.approx(report["magnitude_rmse"], rel=1e-12)
        assert angle == pytest.approx(report["angle_rmse"], rel=1e-12)
        assert report["retained_samples"] == 3
        assert set(report["structural_intervals"]) == {"d"}

    def test_predict_mean_and_samples(self, trained, config_path, tmp_path):
        output = tmp_path / "pred.csv"
        result = invoke("predict", "-c", config_path, "--chain", trained / "chain.jsonl", "-n", 2, "-o", output)
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(output)
        assert set(frame["model"]) == {"mean", "sample_0", "sample_1"}
        assert len(frame) == 3 * 101
        summary = json.loads(output.with_suffix(".json").read_text())
        assert set(summary["energy_violations"]) == {"mean", "sample_0", "sample_1"}

    def test_predict_needs_enough_samples(self, trained, config_path, tmp_path):
        result = invoke(
            "predict", "-c", config_path, "--chain", trained / "chain.jsonl", "-n", 10, "-o", tmp_path / "p.csv"
        )
        assert result.exit_code == 1
        assert "Artifact error" in result.output

    def test_diagnose_acceptance_matches_chain(self, trained, tmp_path):
        output = tmp_path / "diagnostics.json"
        result = invoke("diagnose", "--chain", trained / "chain.jsonl", "--burn-in", 1, "-o", output)
        assert result.exit_code == 0, result.output
        report = json.loads(output.read_text())
        chain = read_chain(trained / "chain.jsonl")
        for block in ("kernel", "structural"):
            expected = np.mean([s.accepted[block] for s in chain])
            assert report["acceptance_rates"][block] == pytest.approx(expected)
        assert report["num_retained"] == 3
        assert {"signal_variance", "length_scale", "d", "noise_variance"} <= set(report["traces"])

    def test_predict_single_record_chain_reproduces_its_model(self, config_path, tmp_path):
        config = load_config(config_path)
        expansion, structure = config.build_expansion(), config.build_structure()
        weights = np.zeros(expansion.M)
        weights[0], weights[2] = -0.5, 0.2
        params, hypers = GPParams(weights, 1e-6), {"d": 0.15}
        chain_path = tmp_path / "chain.jsonl"
        with ChainWriter(chain_path) as writer:
            writer(ChainSample(1, params, KernelHyperparams(1.0, 1.0), hypers))

        output = tmp_path / "pred.csv"
        result = invoke("predict", "-c", config_path, "--chain", chain_path, "--burn-in", 0, "-n", 0, "-o", output)
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(output)
        assert set(frame["model"]) == {"mean"}

        scenario = config.test_scenario
        expected = rollout_symplectic(
            lambda x: predict_gradient(expansion, params, x),
            structure.with_hypers(hypers),
            np.asarray(scenario.initial_state),
            scenario.signal(scenario.times)[:, None],
            scenario.step_size_s,
        )
        np.testing.assert_allclose(frame[["q", "p"]].to_numpy(), expected, rtol=1e-12, atol=1e-14)

    def test_diagnose_burn_in_past_chain_end(self, trained, tmp_path):
        result = invoke("diagnose", "--chain", trained / "chain.jsonl", "--burn-in", 4, "-o", tmp_path / "d.json")
        assert result.exit_code == 1
        assert "Artifact error" in result.output

    def test_summarize_states_writes_bands(self, trained, tmp_path):
        output = tmp_path / "states.csv"
        result = invoke(
            "summarize-states", "--trajectories", trained / "trajectories.csv", "--burn-in", 2, "-o", output
        )
        assert result.exit_code == 0, result.output
        summary = pd.read_csv(output)
        assert len(summary) == 21
        assert (summary["num_samples"] == 1).all()
        assert {"x0_mean", "x0_low", "x0_high", "x1_mean", "h1_high"} <= set(summary.columns)
        stored = pd.read_csv(trained / "trajectories.csv")
        last = stored[stored["k"] == 4].sort_values("t")
        np.testing.assert_allclose(summary["x0_mean"], last["x0"], rtol=1e-12)
        np.testing.assert_allclose(summary["x0_low"], last["x0"], rtol=1e-12)

    def test_summarize_states_rejects_reversed_band(self, trained, tmp_path):
        result = invoke(
            "summarize-states", "--trajectories", trained / "trajectories.csv", "--band", 0.9, 0.1,
            "-o", tmp_path / "s.csv",
        )
        assert result.exit_code == 1
        assert "Configuration error" in result.output


class TestEvaluationHelpers:
    def test_identical_flows_have_zero_error(self):
        truth = OscillatorTruth()
        report = evaluate_flow_map(truth.flow, truth.flow, -2.5, 2.5, 21)
        assert report.magnitude_rmse == 0.0
        assert report.angle_rmse == 0.0
        assert report.excluded_cells >= 1

    def test_reversed_flow_has_angle_pi(self):
        truth = OscillatorTruth()
        report = evaluate_flow_map(lambda x: -truth.flow(x), truth.flow, -2.0, 2.0, 4)
        assert report.angle_rmse == pytest.approx(np.pi)
        assert report.magnitude_rmse == pytest.approx(0.0, abs=1e-12)

    def test_mean_model_averages(self, trained):
        chain = read_chain(trained / "chain.jsonl")
        model = mean_model(chain)
        np.testing.assert_allclose(model.params.weights, np.mean([s.params.weights for s in chain], axis=0))
        assert model.structural_hypers["d"] == pytest.approx(np.mean([s.structural_hypers["d"] for s in chain]))

    def test_diagnose_constant_chain(self, trained):
        chain = read_chain(trained / "chain.jsonl")[:1] * 3
        report = diagnose_chain(chain)
        assert report["traces"]["noise_variance"]["std"] == 0.0

    def test_diagnose_rejects_burn_in_that_discards_everything(self, trained):
        chain = read_chain(trained / "chain.jsonl")
        with pytest.raises(ArtifactError, match="leaves no records"):
            diagnose_chain(chain, burn_in=len(chain))

    def test_true_model_forecast_matches_simulation(self):
        config = ExperimentConfig()
        scenario, truth = config.test_scenario, config.truth()
        frame, violations = forecast_trajectory(
            "truth", truth.gradient, truth.hamiltonian, truth.structure(), scenario, config.evaluation.energy_tolerance
        )
        data = generate_data(scenario, truth, np.random.default_rng(0))
        np.testing.assert_array_equal(frame[["q", "p"]].to_numpy(), data.states)
        # Damping alone acts once the input stops, so the energy never rises.
        assert violations == 0
        assert frame["H"].iloc[-1] < frame["H"].iloc[len(frame) // 2]


class TestSummarizeStates:
    @pytest.fixture
    def trajectories(self):
        rows = []
        for k, offset in zip((2, 4, 6, 8), (0.0, 1.0, 2.0, 3.0)):
            for t in range(3):
                rows.append({"k": k, "t": t, "x0": t + offset, "x1": -offset, "h0": 0.5 * t, "h1": 1.0})
        return pd.DataFrame(rows)

    def test_mean_and_band_per_time(self, trajectories):
        summary = summarize_states(trajectories, burn_in=0, level=(0.0, 1.0))
        assert list(summary["t"]) == [0, 1, 2]
        assert list(summary["num_samples"]) == [4, 4, 4]
        np.testing.assert_allclose(summary["x0_mean"], [1.5, 2.5, 3.5])
        np.testing.assert_allclose(summary["x0_low"], [0.0, 1.0, 2.0])
        np.testing.assert_allclose(summary["x0_high"], [3.0, 4.0, 5.0])
        np.testing.assert_allclose(summary["x1_mean"], -1.5)
        np.testing.assert_allclose(summary["h1_low"], 1.0)

    def test_burn_in_drops_early_iterations(self, trajectories):
        summary = summarize_states(trajectories, burn_in=4, level=(0.5, 0.5 + 1e-9))
        assert list(summary["num_samples"]) == [2, 2, 2]
        np.testing.assert_allclose(summary["x0_mean"], [2.5, 3.5, 4.5])
        np.testing.assert_allclose(summary["x0_low"], [2.5, 3.5, 4.5])

    def test_quantile_band_interpolates(self, trajectories):
        summary = summarize_states(trajectories, level=(0.25, 0.75))
        np.testing.assert_allclose(summary["x1_low"], -2.25)
        np.testing.assert_allclose(summary["x1_high"], -0.75)

    def test_everything_burned_in(self, trajectories):
        with pytest.raises(ArtifactError, match="past burn-in"):
            summarize_states(trajectories, burn_in=8)

    def test_missing_state_columns(self):
        with pytest.raises(ArtifactError, match="x0"):
            summarize_states(pd.DataFrame({"k": [1], "t": [0]}))
