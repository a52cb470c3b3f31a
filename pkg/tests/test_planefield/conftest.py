from collections.abc import Generator

import pytest
from typer.testing import CliRunner

from planefield import logs
from planefield.schemas import SeriesControl
from planefield.settings import get_settings

from .common import get_testing_settings


@pytest.fixture(autouse=True)
def testing_settings(monkeypatch: pytest.MonkeyPatch) -> Generator[None, None, None]:
    """Environment matching the testing settings, with a fresh settings cache."""
    settings = get_testing_settings()
    monkeypatch.setenv("PLANEFIELD_SEED", str(settings.seed))
    monkeypatch.setenv("PLANEFIELD_WORKERS", str(settings.workers))
    monkeypatch.setenv("PLANEFIELD_CHUNK_SIZE", str(settings.chunk_size))
    monkeypatch.delenv("PLANEFIELD_LOG_FILE", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def ctrl() -> SeriesControl:
    """Default truncation policy."""
    return SeriesControl()


@pytest.fixture
def quiet_logging(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep the command line from installing its logging handlers."""
    monkeypatch.setattr(logs, "configure", lambda *_, **__: None)


@pytest.fixture
def runner() -> CliRunner:
    """Typer test runner."""
    return CliRunner()
