"""Logging configuration."""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Optional, Union

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
# Experiment levels run on "level_N" pool threads when workers > 1
THREADED_LOG_FORMAT = "%(asctime)s - %(threadName)s - %(name)s - %(levelname)s - %(message)s"


def resolve_level(log_level: Union[str, int, None] = None, verbose: bool = False) -> int:
    """Turn a level name, number or the verbose flag into a logging level.

    Raises:
        ValueError: If the name is not a standard logging level
    """
    if verbose:
        return logging.DEBUG
    if log_level is None:
        return logging.INFO
    if isinstance(log_level, int):
        return log_level
    level = logging.getLevelName(str(log_level).strip().upper())
    if not isinstance(level, int):
        raise ValueError(f"unknown log level: {log_level!r}")
    return level


def setup_logging(log_level: Union[str, int, None] = None, log_file: Optional[str] = None,
                  max_bytes: int = 2 * 1024 * 1024, backup_count: int = 5,
                  verbose: bool = False, threaded: bool = False):
    """Configure logging for the application.

    Diagnostics always go to standard error; standard output is reserved for
    the paths and data a command produces.

    Args:
        log_level: Level name or number (DEBUG, INFO, WARNING, ERROR)
        log_file: Path to an optional rotating log file
        max_bytes: Maximum size of each log file in bytes (default: 2 MB)
        backup_count: Number of backup files to keep (default: 5)
        verbose: Force DEBUG regardless of log_level
        threaded: Tag records with the worker thread name
    """
    level = resolve_level(log_level, verbose)
    formatter = logging.Formatter(THREADED_LOG_FORMAT if threaded else LOG_FORMAT)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=max_bytes,
            backupCount=backup_count
        )
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    return root_logger
