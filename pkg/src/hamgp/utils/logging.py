"""Run logging setup."""

import sys
from pathlib import Path
from typing import Optional, Union

from loguru import logger

LOG_FORMAT = "{time:HH:mm:ss} | {level: <8} | {name}:{function} - {message}"


def configure_logging(level: str = "INFO", log_file: Optional[Union[str, Path]] = None) -> None:
    """Reset loguru sinks to stderr plus an optional run log file.

    Args:
        level: Minimum level for both sinks
        log_file: Path of the run log (e.g. ``<output_dir>/run.log``)
    """
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT)
    if log_file is not None:
        logger.add(str(log_file), level="DEBUG", format=LOG_FORMAT, mode="w")
