"""
Centralized logging configuration with rotation for the qroute toolkit

Features:
- Rotating file handler (max 10MB per file, 5 backup files)
- Separate error log
- Structured format with timestamps
- Per-module log levels
- Automatic log directory creation (override with QROUTE_LOG_DIR)
- configure_logging() re-points existing loggers once .env settings are loaded
"""
import logging
import os
from logging.handlers import RotatingFileHandler
from pathlib import Path

# Determine project root (3 levels up from this file: utils -> src -> project)
PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent
LOGS_DIR = Path(os.getenv("QROUTE_LOG_DIR", str(PROJECT_ROOT / "logs")))

# Ensure logs directory exists
LOGS_DIR.mkdir(parents=True, exist_ok=True)

# Log file paths
MAIN_LOG_FILE = LOGS_DIR / "qroute.log"
ERROR_LOG_FILE = LOGS_DIR / "errors.log"

# Global logging configuration
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Default log level (can be overridden per module)
DEFAULT_LOG_LEVEL = logging.INFO

# Console threshold, QROUTE_LOG_LEVEL=DEBUG makes the console verbose too
CONSOLE_LOG_LEVEL = logging.getLevelName(os.getenv("QROUTE_LOG_LEVEL", "INFO").upper())
if not isinstance(CONSOLE_LOG_LEVEL, int):
    CONSOLE_LOG_LEVEL = logging.INFO

# Module-specific log levels (can be configured here)
MODULE_LOG_LEVELS = {
    "routing.circuit": logging.INFO,
    "routing.topology": logging.INFO,
    "routing.env": logging.INFO,
    "routing.mcts": logging.INFO,
    "routing.baselines": logging.DEBUG,  # Per-circuit routing summaries
    "routing.agent": logging.INFO,
    "routing.trainer": logging.INFO,
    "services.router_service": logging.INFO,
    "services.bench_service": logging.INFO,
    "main": logging.INFO,
}

# Store configured loggers to avoid duplicate handlers
_configured_loggers = set()

# Marks handlers owned by this module so they can be swapped out later
TOOLKIT_HANDLER_ATTR = "_qroute_handler"


def _console_level(level) -> int:
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(str(level).upper())
    return resolved if isinstance(resolved, int) else logging.INFO


def _attach_handlers(logger: logging.Logger):
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    # Console handler (stderr, so CLI output on stdout stays clean)
    console_handler = logging.StreamHandler()
    console_handler.setLevel(CONSOLE_LOG_LEVEL)

    # Rotating file handler for all logs (DEBUG and above)
    # Max 10MB per file, keep 5 backup files
    file_handler = RotatingFileHandler(
        MAIN_LOG_FILE,
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=5,
        encoding='utf-8'
    )
    file_handler.setLevel(logging.DEBUG)

    # Separate rotating file handler for errors only (ERROR and above)
    error_handler = RotatingFileHandler(
        ERROR_LOG_FILE,
        maxBytes=5 * 1024 * 1024,  # 5MB
        backupCount=3,
        encoding='utf-8'
    )
    error_handler.setLevel(logging.ERROR)

    for handler in (console_handler, file_handler, error_handler):
        handler.setFormatter(formatter)
        setattr(handler, TOOLKIT_HANDLER_ATTR, True)
        logger.addHandler(handler)


def toolkit_handlers(logger: logging.Logger) -> list:
    """Handlers installed by get_logger (ignores handlers added by other code)"""
    return [h for h in logger.handlers if getattr(h, TOOLKIT_HANDLER_ATTR, False)]


def get_logger(name: str) -> logging.Logger:
    """
    Get a configured logger instance with rotation

    Args:
        name: Logger name (typically __name__ from calling module)

    Returns:
        Configured logger instance

    Example:
        >>> from utils.logger import get_logger
        >>> logger = get_logger(__name__)
        >>> logger.info("Routing started")
    """
    logger = logging.getLogger(name)

    # Avoid adding handlers multiple times
    if name in _configured_loggers:
        return logger

    _configured_loggers.add(name)

    # Set log level (module-specific or default)
    log_level = MODULE_LOG_LEVELS.get(name, DEFAULT_LOG_LEVEL)
    logger.setLevel(log_level)
    _attach_handlers(logger)

    # Prevent propagation to root logger (avoid duplicate logs)
    logger.propagate = False

    return logger


def configure_logging(log_dir=None, console_level=None):
    """
    Move the log files and/or change the console threshold for every logger
    handed out by get_logger, including ones created before this call

    Args:
        log_dir: New directory for qroute.log and errors.log
        console_level: Level name or number for console output

    Example:
        >>> configure_logging("/tmp/qroute-logs", "DEBUG")
    """
    global LOGS_DIR, MAIN_LOG_FILE, ERROR_LOG_FILE, CONSOLE_LOG_LEVEL

    if console_level is not None:
        CONSOLE_LOG_LEVEL = _console_level(console_level)
    if log_dir is not None:
        LOGS_DIR = Path(log_dir)
        LOGS_DIR.mkdir(parents=True, exist_ok=True)
        MAIN_LOG_FILE = LOGS_DIR / "qroute.log"
        ERROR_LOG_FILE = LOGS_DIR / "errors.log"

    for name in _configured_loggers:
        logger = logging.getLogger(name)
        for handler in toolkit_handlers(logger):
            logger.removeHandler(handler)
            handler.close()
        _attach_handlers(logger)


def set_log_level(logger_name: str, level: int):
    """
    Change log level for a specific logger at runtime

    Args:
        logger_name: Name of the logger to modify
        level: New log level (e.g., logging.DEBUG, logging.INFO)

    Example:
        >>> set_log_level("routing.mcts", logging.DEBUG)
    """
    logger = logging.getLogger(logger_name)
    logger.setLevel(level)

    # Update module configuration
    MODULE_LOG_LEVELS[logger_name] = level


def get_log_files_info():
    """
    Get information about current log files

    Returns:
        dict: Dictionary with log file paths and sizes
    """
    info = {}

    for log_file in [MAIN_LOG_FILE, ERROR_LOG_FILE]:
        if log_file.exists():
            size_mb = log_file.stat().st_size / (1024 * 1024)
            info[log_file.name] = {
                "path": str(log_file),
                "size_mb": round(size_mb, 2)
            }
        else:
            info[log_file.name] = {"path": str(log_file), "size_mb": 0}

    return info
