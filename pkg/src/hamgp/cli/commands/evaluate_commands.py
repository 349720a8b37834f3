"""Evaluation commands for the hamgp CLI: flow maps, predictions, state summaries and diagnostics."""

from pathlib import Path

import click
import numpy as np

from hamgp.cli.commands.common import report_error, write_json
from hamgp.cli.config import load_config
from hamgp.cli.evaluation import (
    diagnose_chain,
    evaluate_flow_map,
    mean_model,
    model_flow,
    posterior_interval,
    predict_ensemble,
    summarize_states,
)
from hamgp.learn.artifacts import CSV_FLOAT_FORMAT, read_chain, read_trajectories, retained_samples


def _chain_option(f):
    return click.option(
        "--chain", "chain_path",
        required=True,
        type=click.Path(exists=True, dir_okay=False),
        help="Chain file written by 'hamgp train' (chain.jsonl)",
    )(f)


def _burn_in_option(f):
    return click.option(
        "--burn-in",
        type=int,
        help="Discard iterations up to this index (default: sampler.burn_in of the config)",
    )(f)


@click.command("eval-flowmap")
@click.option(
    "-c", "--config", "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Experiment config used for training",
)
@_chain_option
@_burn_in_option
@click.option(
    "-o", "--output",
    type=click.Path(dir_okay=False),
    help="Report JSON (default: flowmap.json next to the chain); cells go to flowmap_cells.csv",
)
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
def eval_flowmap(config_path, chain_path, burn_in, output, verbose):
    """Compare the posterior-mean flow field with the true oscillator flow.

    \b
    Examples:
        hamgp eval-flowmap -c configs/smoke.json --chain runs/smoke/chain.jsonl
    """
    try:
        config = load_config(config_path)
        burn_in = config.sampler.burn_in if burn_in is None else burn_in
        samples = retained_samples(read_chain(chain_path), burn_in, config.sampler.thinning)
        expansion, structure = config.build_expansion(), config.build_structure()
        evaluation = config.evaluation

        report = evaluate_flow_map(
            model_flow(expansion, structure, mean_model(samples)),
            config.truth().flow,
            evaluation.grid_min,
            evaluation.grid_max,
            evaluation.grid_points,
        )
        report_path = Path(output) if output else Path(chain_path).parent / "flowmap.json"
        cells_path = report_path.parent / "flowmap_cells.csv"
        summary = report.to_dict()
        summary["retained_samples"] = len(samples)
        summary["cells_file"] = cells_path.name
        for slot in structure.slots:
            low, high = posterior_interval(samples, slot)
            summary.setdefault("structural_intervals", {})[slot] = {"q05": low, "q95": high}
        write_json(report_path, summary)
        report.cells.to_csv(cells_path, index=False, float_format=CSV_FLOAT_FORMAT)

        if verbose:
            click.echo(f"Retained {len(samples)} samples after burn-in {burn_in}")
            click.echo(f"Excluded {report.excluded_cells} near-zero cells from the angle RMSE")
        click.echo(f"Flow magnitude RMSE: {report.magnitude_rmse:.4f}")
        click.echo(f"Flow angle RMSE: {report.angle_rmse:.4f} rad")
        click.echo(click.style(f"✓ Report written to {report_path}", fg="green"))
    except Exception as e:
        report_error(e, verbose)


@click.command("predict")
@click.option(
    "-c", "--config", "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Experiment config used for training",
)
@_chain_option
@_burn_in_option
@click.option(
    "--scenario",
    type=click.Choice(["test", "train"]),
    default="test",
    help="Scenario to forward-simulate (default: test)",
)
@click.option(
    "-n", "--n-samples",
    type=int,
    help="Random posterior models besides the mean model (default: evaluation.num_samples)",
)
@click.option(
    "-o", "--output",
    type=click.Path(dir_okay=False),
    help="Ensemble CSV (default: predictions.csv next to the chain)",
)
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
def predict(config_path, chain_path, burn_in, scenario, n_samples, output, verbose):
    """Forward-predict with the mean model and random posterior samples.

    Emits one row per model and time step with u, q, p and the learned
    Hamiltonian, and counts energy increases after the input has stopped.

    \b
    Examples:
        hamgp predict -c configs/smoke.json --chain runs/smoke/chain.jsonl -n 10
    """
    try:
        config = load_config(config_path)
        burn_in = config.sampler.burn_in if burn_in is None else burn_in
        n_samples = config.evaluation.num_samples if n_samples is None else n_samples
        samples = retained_samples(read_chain(chain_path), burn_in, config.sampler.thinning)
        chosen = config.test_scenario if scenario == "test" else config.scenario

        frame, violations = predict_ensemble(
            config.build_expansion(),
            config.build_structure(),
            samples,
            chosen,
            n_samples,
            np.random.default_rng(config.sampler.seed),
            config.evaluation.energy_tolerance,
        )
        output_path = Path(output) if output else Path(chain_path).parent / "predictions.csv"
        output_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(output_path, index=False, float_format=CSV_FLOAT_FORMAT)
        write_json(
            output_path.with_suffix(".json"),
            {"models": sorted(violations), "energy_violations": violations, "scenario": scenario},
        )

        if verbose:
            for name, count in violations.items():
                click.echo(f"{name}: {count} energy increases after the input stopped")
        click.echo(click.style(f"✓ Wrote {len(violations)} trajectories to {output_path}", fg="green"))
    except Exception as e:
        report_error(e, verbose)


@click.command("diagnose")
@_chain_option
@click.option(
    "-c", "--config", "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Experiment config (supplies the default burn-in)",
)
@_burn_in_option
@click.option(
    "-o", "--output",
    type=click.Path(dir_okay=False),
    help="Diagnostics JSON (default: diagnostics.json next to the chain)",
)
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
def diagnose(chain_path, config_path, burn_in, output, verbose):
    """Acceptance rates, trace summaries and hyperparameter histograms.

    \b
    Examples:
        hamgp diagnose --chain runs/smoke/chain.jsonl --burn-in 5
    """
    try:
        if burn_in is None:
            burn_in = load_config(config_path).sampler.burn_in if config_path else 0
        report = diagnose_chain(read_chain(chain_path), burn_in)
        output_path = Path(output) if output else Path(chain_path).parent / "diagnostics.json"
        write_json(output_path, report)

        for block, rate in report["acceptance_rates"].items():
            click.echo(f"Acceptance ({block}): {rate:.3f}")
        if verbose:
            for name, trace in report["traces"].items():
                click.echo(f"{name}: mean {trace['mean']:.4g}, 5-95% [{trace['q05']:.4g}, {trace['q95']:.4g}]")
        click.echo(click.style(f"✓ Diagnostics written to {output_path}", fg="green"))
    except Exception as e:
        report_error(e, verbose)


@click.command("summarize-states")
@click.option(
    "--trajectories", "trajectories_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Trajectory file written by 'hamgp train' (trajectories.csv)",
)
@click.option(
    "-c", "--config", "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Experiment config (supplies the default burn-in)",
)
@_burn_in_option
@click.option(
    "--band",
    type=float,
    nargs=2,
    default=(0.05, 0.95),
    show_default=True,
    help="Lower and upper quantile of the band",
)
@click.option(
    "-o", "--output",
    type=click.Path(dir_okay=False),
    help="Summary CSV (default: states_summary.csv next to the trajectories)",
)
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
def summarize_states_command(trajectories_path, config_path, burn_in, band, output, verbose):
    """Posterior mean and quantile band of the sampled states at every time step.

    \b
    Examples:
        hamgp summarize-states --trajectories runs/smoke/trajectories.csv --burn-in 5
        hamgp summarize-states --trajectories runs/smoke/trajectories.csv --band 0.025 0.975
    """
    try:
        if burn_in is None:
            burn_in = load_config(config_path).sampler.burn_in if config_path else 0
        trajectories = read_trajectories(trajectories_path)
        summary = summarize_states(trajectories, burn_in, tuple(band))
        output_path = Path(output) if output else Path(trajectories_path).parent / "states_summary.csv"
        output_path.parent.mkdir(parents=True, exist_ok=True)
        summary.to_csv(output_path, index=False, float_format=CSV_FLOAT_FORMAT)

        if verbose:
            counts = summary["num_samples"]
            click.echo(f"Trajectories per time step: {counts.min()}-{counts.max()}")
        click.echo(click.style(f"✓ Summarized {len(summary)} time steps to {output_path}", fg="green"))
    except Exception as e:
        report_error(e, verbose)
