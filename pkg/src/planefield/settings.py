"""Planefield settings."""

import functools
from pathlib import Path

import pydantic_settings
from pydantic import PositiveFloat, PositiveInt


class SettingsModel(pydantic_settings.BaseSettings):
    """Planefield settings."""

    model_config = pydantic_settings.SettingsConfigDict(
        env_prefix="planefield_", env_file=".env", extra="ignore"
    )

    seed: int = 0
    """Default seed when none is given on the command line."""
    workers: PositiveInt = 1
    """Number of threads replications are fanned out to."""
    chunk_size: PositiveInt = 16384
    """Replications drawn from one derived random stream."""

    series_tol: PositiveFloat = 1e-13
    """Absolute truncation target of every series."""
    series_max_terms: PositiveInt = 500
    """Term budget of every series."""

    log_level: str = "INFO"
    """Root log level of the command line."""
    log_file: Path | None = None
    """JSON lines log file (no file logging when unset)."""


@functools.lru_cache
def get_settings() -> SettingsModel:
    """Get settings, (chached)."""
    return SettingsModel()
