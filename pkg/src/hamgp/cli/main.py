"""Main CLI entry point for hamgp."""

import click

from hamgp import __version__
from hamgp.cli import commands


@click.group()
@click.version_option(version=__version__, prog_name="hamgp")
def cli():
    """hamgp - Bayesian learning of port-Hamiltonian systems.

    Learns a reduced-rank Gaussian process Hamiltonian, its noise level and
    structural hyperparameters from input-output data with particle Gibbs,
    then evaluates flow maps and forward predictions of the posterior.
    """
    pass


cli.add_command(commands.train)
cli.add_command(commands.simulate)
cli.add_command(commands.eval_flowmap)
cli.add_command(commands.predict)
cli.add_command(commands.diagnose)
cli.add_command(commands.summarize_states_command)


@cli.group()
def config():
    """Experiment config helpers."""
    pass


config.add_command(commands.config_init)


if __name__ == "__main__":
    cli()
