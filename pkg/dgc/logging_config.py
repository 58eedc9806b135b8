"""
Logging configuration for the gap-filling library and command line.

Nothing is configured at import time; library users keep full control of the
root logger and the command line calls setup_logging once at start-up.
"""

import os
import json
import logging
import logging.handlers
import platform
import sys
import traceback
from datetime import datetime
from pathlib import Path
from typing import Optional, Union

import psutil

# Main output format
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
# Compact format for console output
SHORT_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

NOISY_LOGGERS = ['matplotlib', 'numexpr', 'PIL']


class JsonFormatter(logging.Formatter):
    """Formats log records as one JSON object per line"""

    def format(self, record):
        log_data = {
            "timestamp": datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno
        }

        if record.exc_info:
            log_data["exception"] = {
                "type": record.exc_info[0].__name__,
                "message": str(record.exc_info[1]),
                "traceback": traceback.format_exception(*record.exc_info, limit=5)
            }

        # structured payload passed as extra={"data": {...}}
        if hasattr(record, "data") and record.data:
            log_data["data"] = record.data

        return json.dumps(log_data, ensure_ascii=False, default=str)


def setup_logging(
    level: Union[int, str] = logging.INFO,
    log_dir: Optional[Union[str, Path]] = None,
    console: bool = True,
    json_log: bool = False,
    format_str: str = LOG_FORMAT
) -> logging.Logger:
    """
    Configure the root logger

    Args:
        level: Log level (name or number)
        log_dir: Directory for rotating log files; no files are written when None
        console: Whether to log to stderr
        json_log: Whether to keep an additional JSON-lines log in log_dir
        format_str: Format for console and text file handlers

    Returns:
        Logger: the configured root logger
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    for h in root_logger.handlers[:]:
        root_logger.removeHandler(h)
        h.close()

    formatter = logging.Formatter(format_str)

    if log_dir is not None:
        log_dir = Path(log_dir)
        error_dir = log_dir / "errors"
        error_dir.mkdir(parents=True, exist_ok=True)

        file_handler = logging.handlers.RotatingFileHandler(
            log_dir / "dgc.log", maxBytes=10*1024*1024, backupCount=5, encoding="utf-8"
        )
        file_handler.setFormatter(formatter)
        file_handler.setLevel(level)
        root_logger.addHandler(file_handler)

        # ERROR and above go to a separate file as well
        error_handler = logging.handlers.RotatingFileHandler(
            error_dir / "errors.log", maxBytes=5*1024*1024, backupCount=10, encoding="utf-8"
        )
        error_handler.setFormatter(formatter)
        error_handler.setLevel(logging.ERROR)
        root_logger.addHandler(error_handler)

        if json_log:
            json_handler = logging.handlers.RotatingFileHandler(
                log_dir / "dgc.json.log", maxBytes=10*1024*1024, backupCount=5, encoding="utf-8"
            )
            json_handler.setFormatter(JsonFormatter())
            json_handler.setLevel(level)
            root_logger.addHandler(json_handler)
    elif json_log:
        logging.getLogger(__name__).warning("json_log requested without log_dir, JSON log disabled")

    if console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(logging.Formatter(SHORT_FORMAT))
        console_handler.setLevel(level)
        root_logger.addHandler(console_handler)

    for logger_name in NOISY_LOGGERS:
        logging.getLogger(logger_name).setLevel(logging.WARNING)

    root_logger.debug("Logging configured: level=%s, log_dir=%s, json=%s",
                      logging.getLevelName(level), log_dir, json_log)
    return root_logger


def log_system_info():
    """Log interpreter, platform and hardware information"""
    logger = logging.getLogger(__name__)
    logger.info(f"Python version: {platform.python_version()}")
    logger.info(f"Platform: {platform.platform()}")
    logger.debug(f"Working directory: {os.getcwd()}")

    memory = psutil.virtual_memory()
    logger.info(
        f"CPUs: {psutil.cpu_count(logical=False)} physical / {psutil.cpu_count(logical=True)} logical, "
        f"available memory: {memory.available / 1024**3:.1f} GiB"
    )
