"""
Logging utility for the project
Provides consistent logging across all modules
"""

import logging
import os
import sys
from typing import Optional

import colorlog


def _level_from_env(default: int) -> int:
    name = os.getenv('BANDSLEEP_LOG_LEVEL', '').strip().upper()
    if not name:
        return default
    resolved = logging.getLevelName(name)
    return resolved if isinstance(resolved, int) else default


def setup_logger(name: str, level: int = logging.INFO, log_file: Optional[str] = None):
    """
    Set up a logger with console and optional file handlers

    The console handler writes to stderr: stdout is reserved for piped
    trace and plan CSV.

    Args:
        name: Logger name (usually __name__)
        level: Logging level (default: INFO, overridden by BANDSLEEP_LOG_LEVEL)
        log_file: Optional log file path (falls back to BANDSLEEP_LOG_FILE)

    Returns:
        Configured logger instance
    """

    logger = logging.getLogger(name)
    level = _level_from_env(level)
    logger.setLevel(level)

    # Avoid duplicate handlers if logger already exists
    if logger.handlers:
        return logger

    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    console_formatter = colorlog.ColoredFormatter(
        '%(log_color)s%(levelname)s%(reset)s - %(message)s',
        log_colors={
            'DEBUG': 'cyan',
            'INFO': 'green',
            'WARNING': 'yellow',
            'ERROR': 'red',
            'CRITICAL': 'bold_red',
        }
    )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(console_formatter)
    logger.addHandler(console_handler)
    logger.propagate = False

    log_file = log_file or os.getenv('BANDSLEEP_LOG_FILE')
    if log_file:
        try:
            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setLevel(level)
            file_handler.setFormatter(detailed_formatter)
            logger.addHandler(file_handler)
        except Exception as e:
            logger.warning(f"Could not create log file: {e}")

    return logger
