"""Logging utilities for ANCL."""

import logging
import os
import sys
from pathlib import Path
from typing import Optional


def setup_logger(
    name: str,
    level: Optional[str] = None,
    log_file: Optional[Path] = None,
) -> logging.Logger:
    """Set up logger with console and file handlers.

    Console output goes to stderr; stdout is kept for command results.

    Args:
        name: Logger name
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL).
            Falls back to ANCL_LOG_LEVEL, then INFO.
        log_file: Optional log file path

    Returns:
        Configured logger
    """
    if level is None:
        level = os.getenv('ANCL_LOG_LEVEL', 'INFO')

    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level.upper()))

    # Remove existing handlers
    logger.handlers.clear()

    # Console handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, level.upper()))
    console_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    console_handler.setFormatter(console_formatter)
    logger.addHandler(console_handler)

    # File handler
    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        file_handler.setFormatter(file_formatter)
        logger.addHandler(file_handler)

    return logger


def attach_run_log(log_file: Path, level: Optional[str] = None):
    """Routes every ``ancl.*`` logger into a run log file.

    Args:
        log_file: Path of the run log inside the output directory
        level: Log level for the package loggers
    """
    for name in list(logging.root.manager.loggerDict):
        if name == 'ancl' or name.startswith('ancl.'):
            setup_logger(name, level=level, log_file=log_file)
