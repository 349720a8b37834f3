"""Config helper commands for the hamgp CLI."""

import json

import click

from hamgp.cli.commands.common import report_error
from hamgp.cli.config import default_config


@click.command("init")
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
def config_init(verbose):
    """Print the full default experiment config to stdout.

    \b
    Examples:
        hamgp config init > config.json
    """
    try:
        config = default_config()
        config.validate()
        click.echo(json.dumps(config.to_dict(), indent=2))
    except Exception as e:
        report_error(e, verbose)
