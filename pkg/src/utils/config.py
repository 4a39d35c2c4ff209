"""
Environment configuration for the qroute toolkit

Values come from the process environment, optionally seeded from a .env
file at the project root (see .env.example).
"""
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from .errors import ConfigError
from .logger import configure_logging

PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent


@dataclass(frozen=True)
class Settings:
    """Process-wide defaults read from the environment"""
    seed: int = 0
    log_dir: Path = PROJECT_ROOT / "logs"
    log_level: str = "INFO"
    workers: int = 1


def _int_from_env(name: str, default: int, minimum: Optional[int] = None) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def _level_from_env(name: str, default: str) -> str:
    level = (os.getenv(name) or default).strip().upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigError(f"{name} must be a logging level name, got {level!r}")
    return level


def load_settings(dotenv_path: Optional[Path] = None, apply_logging: bool = True) -> Settings:
    """
    Build Settings from the environment

    Args:
        dotenv_path: Optional .env file; defaults to the project .env if present
        apply_logging: Point the log files and console level at the loaded values

    Returns:
        Settings instance
    """
    load_dotenv(dotenv_path or PROJECT_ROOT / ".env")
    settings = Settings(
        seed=_int_from_env("QROUTE_SEED", 0),
        log_dir=Path(os.getenv("QROUTE_LOG_DIR") or str(PROJECT_ROOT / "logs")),
        log_level=_level_from_env("QROUTE_LOG_LEVEL", "INFO"),
        workers=_int_from_env("QROUTE_WORKERS", 1, minimum=1),
    )
    if apply_logging:
        configure_logging(settings.log_dir, settings.log_level)
    return settings
