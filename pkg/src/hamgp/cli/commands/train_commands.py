"""Training and data simulation commands for the hamgp CLI."""

from pathlib import Path

import click
import numpy as np

from hamgp.cli.commands.common import (
    CHAIN_NAME,
    TRAJECTORIES_NAME,
    load_or_generate,
    report_error,
    write_manifest,
)
from hamgp.cli.config import RunEnvironment, load_config
from hamgp.learn.artifacts import ChainWriter
from hamgp.learn.gibbs import run_particle_gibbs
from hamgp.simulate.oscillator import generate_data, write_dataset
from hamgp.utils.exceptions import ChainAbortedError
from hamgp.utils.logging import configure_logging


@click.command("train")
@click.option(
    "-c", "--config", "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Experiment config file (JSON)",
)
@click.option(
    "-o", "--output-dir",
    type=click.Path(file_okay=False),
    help="Directory for chain, trajectories, manifest and run log (or set HAMGP_OUTPUT_DIR in .env)",
)
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    help="Console log level (or set HAMGP_LOG_LEVEL in .env; default: INFO)",
)
@click.option(
    "--env-file",
    type=click.Path(exists=True),
    help="Path to .env file (default: searches current dir and parents)",
)
@click.option(
    "--progress/--no-progress",
    default=True,
    help="Show a progress bar over iterations",
)
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
def train(config_path, output_dir, log_level, env_file, progress, verbose):
    """Run particle Gibbs on simulated or external data.

    Writes chain.jsonl (one record per iteration), trajectories.csv (latent
    paths every trajectory_stride iterations), dataset.csv when simulating,
    run.log and manifest.json to the output directory.

    \b
    Examples:
        hamgp train -c configs/smoke.json
        hamgp train -c configs/oscillator_input_state.json -o runs/input_state
    """
    try:
        env = RunEnvironment(env_file)
        config = load_config(config_path)
        out = env.output_dir(output_dir, config)
        out.mkdir(parents=True, exist_ok=True)
        configure_logging(env.log_level(log_level), out / "run.log")

        if verbose:
            click.echo(f"Config: {config_path} (sha256 {config.config_hash()[:12]})")
            click.echo(f"Output directory: {out}")

        data = load_or_generate(config, out)
        gibbs_config = config.gibbs_config()
        rng = np.random.default_rng(config.sampler.seed)

        with ChainWriter(out / CHAIN_NAME, out / TRAJECTORIES_NAME) as writer:
            try:
                chain = run_particle_gibbs(gibbs_config, data.observed(), rng, writer, progress=progress)
            except ChainAbortedError as e:
                write_manifest(
                    out, config, "aborted", error=str(e), iteration=e.iteration, chain_records=writer.count
                )
                raise

        write_manifest(out, config, "completed", chain_records=len(chain))
        click.echo(click.style(f"✓ Wrote {len(chain)} chain records to {out / CHAIN_NAME}", fg="green"))

    except Exception as e:
        report_error(e, verbose)


@click.command("simulate")
@click.option(
    "-c", "--config", "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Experiment config file (JSON)",
)
@click.option(
    "-o", "--output",
    default="dataset.csv",
    type=click.Path(dir_okay=False),
    help="Output CSV with columns t, u, y..., x_true... (default: dataset.csv)",
)
@click.option(
    "--scenario",
    type=click.Choice(["train", "test"]),
    default="train",
    help="Which scenario of the config to simulate (default: train)",
)
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
def simulate(config_path, output, scenario, verbose):
    """Simulate the ground-truth oscillator and write the dataset CSV.

    \b
    Examples:
        hamgp simulate -c configs/oscillator_input_output.json -o data/io.csv
    """
    try:
        config = load_config(config_path)
        chosen = config.scenario if scenario == "train" else config.test_scenario
        data = generate_data(chosen, config.truth(), np.random.default_rng(chosen.seed))
        path = write_dataset(data, Path(output))
        if verbose:
            click.echo(f"Mode: {chosen.mode.value}, {chosen.horizon_steps} steps at {chosen.step_size_s} s")
        click.echo(click.style(f"✓ Wrote {data.T + 1} rows to {path}", fg="green"))
    except Exception as e:
        report_error(e, verbose)
