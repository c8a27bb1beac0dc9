"""
Logging configuration for the Tavis-Cummings saturation toolkit
"""

import logging
import sys
from datetime import datetime
from typing import Optional

from config.settings import LOGS_DIR

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def resolve_level(log_level) -> Optional[int]:
    """Map a level name or number to a logging constant, None when unknown."""
    if isinstance(log_level, int):
        return log_level
    level = logging.getLevelName(str(log_level).strip().upper())
    return level if isinstance(level, int) else None


def setup_logging(log_level="INFO", log_to_file=True):
    """
    Configure the root logger for a simulation run.

    Log lines go to stderr; stdout carries only the result summary. Python
    warnings raised by numpy/scipy during a sweep are routed into the
    ``py.warnings`` logger.

    Args:
        log_level: Level name (DEBUG, INFO, WARNING, ERROR) or logging constant.
            Unknown names fall back to INFO with a warning.
        log_to_file: Also write logs/simulation_<timestamp>.log

    Returns:
        The configured root logger
    """
    numeric_level = resolve_level(log_level)
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level if numeric_level is not None else logging.INFO)
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_to_file:
        LOGS_DIR.mkdir(parents=True, exist_ok=True)
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        file_handler = logging.FileHandler(LOGS_DIR / f"simulation_{timestamp}.log")
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    logging.captureWarnings(True)

    if numeric_level is None:
        root_logger.warning(f"Unknown log level {log_level!r}, using INFO")

    return root_logger


def get_logger(name):
    """Get a logger with the specified name"""
    return logging.getLogger(name)
