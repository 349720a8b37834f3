"""CLI commands for hamgp."""

from hamgp.cli.commands.config_commands import config_init
from hamgp.cli.commands.evaluate_commands import diagnose, eval_flowmap, predict, summarize_states_command
from hamgp.cli.commands.train_commands import simulate, train

__all__ = [
    "train",
    "simulate",
    "eval_flowmap",
    "predict",
    "diagnose",
    "summarize_states_command",
    "config_init",
]
