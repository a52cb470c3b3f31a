"""Logging setup of the command line.

Records carry their context as `extra=` attributes (check, variant, statistic, passed, ...).
The terminal formatter prints them as colored `key=value` pairs, the JSON formatter as fields.
"""

import atexit
import contextlib
import json
import logging.config
import logging.handlers
from collections.abc import Iterator, Mapping
from datetime import UTC, datetime
from logging import LogRecord, makeLogRecord
from os import PathLike
from pathlib import Path
from typing import Any, ClassVar, Self, cast, override

import numpy as np
from colorama import Fore, Style

CONFIG_FILE = Path(__file__).parent / "logging.json"
LOG_RECORD_ATTRS = frozenset(("message", "asctime", *makeLogRecord({}).__dict__))


def get_record_extra(record: LogRecord) -> Mapping[str, object]:
    """Attributes given through `extra=`."""
    return {key: value for key, value in record.__dict__.items() if key not in LOG_RECORD_ATTRS}


def _jsonable(value: object) -> object:
    """numpy scalars and arrays as python values, anything else as its `str`."""
    if isinstance(value, np.generic | np.ndarray):
        return value.tolist()
    return str(value)


def _short(value: object) -> str:
    if isinstance(value, float | np.floating):
        return f"{float(value):.6g}"
    return str(value)


class _KeysMixin:
    """Record attributes copied under other names, e.g. {"thread": "threadName"}."""

    def __init__(self: Self, *, format_keys: Mapping[str, str] | None = None) -> None:
        super().__init__()
        self.format_keys = dict(format_keys or {})

    def _mapped(self: Self, record: LogRecord) -> Iterator[tuple[str, object]]:
        for key, attr in self.format_keys.items():
            value = getattr(record, attr, None)
            if value is not None:
                yield key, value


class TerminalFormatter(_KeysMixin, logging.Formatter):
    """One colored line per record: time, level, message, logger, then the extras."""

    LEVEL_COLORS: ClassVar[Mapping[str, str]] = {
        "DEBUG": Fore.CYAN,
        "INFO": Fore.GREEN,
        "WARNING": Fore.YELLOW,
        "ERROR": Fore.RED,
        "CRITICAL": Fore.RED + Style.BRIGHT,
    }
    VERDICT_COLORS: ClassVar[Mapping[str, str]] = {
        "True": Fore.GREEN + Style.BRIGHT,
        "False": Fore.RED + Style.BRIGHT,
    }
    MESSAGE_WIDTH = 40

    @staticmethod
    def _paint(style: str, text: str) -> str:
        return style + text + Style.RESET_ALL if style else text

    def _pair(self: Self, key: str, value: object) -> str:
        text = _short(value)
        style = self.VERDICT_COLORS.get(text, "") if key == "passed" else Fore.WHITE
        return f"{self._paint(Fore.MAGENTA, key)}={self._paint(style, text)}"

    @override
    def format(self: Self, record: LogRecord) -> str:
        created = datetime.fromtimestamp(record.created, tz=UTC).astimezone()
        level = self._paint(self.LEVEL_COLORS.get(record.levelname, ""), record.levelname.ljust(8))
        parts = [
            self._paint(Style.DIM, created.strftime("%Y-%m-%d %H:%M:%S")),
            f"[{level}]",
            self._paint(Fore.WHITE + Style.BRIGHT, record.getMessage().ljust(self.MESSAGE_WIDTH)),
            f"[{self._paint(Fore.BLUE, record.name)}]",
        ]
        extras = [*get_record_extra(record).items(), *self._mapped(record)]
        parts.extend(self._pair(key, value) for key, value in extras)
        line = " ".join(parts)
        if record.exc_info is not None:
            line += "\n" + self.formatException(record.exc_info)
        return line


class JsonFormatter(_KeysMixin, logging.Formatter):
    """One JSON object per record, for the log file."""

    @override
    def format(self: Self, record: LogRecord) -> str:
        log: dict[str, object] = {
            "level": record.levelname,
            "timestamp": datetime.fromtimestamp(record.created, tz=UTC).isoformat(" "),
            "message": record.getMessage(),
        }
        if record.exc_info is not None:
            log["exc_info"] = self.formatException(record.exc_info)
        if record.stack_info is not None:
            log["stack_info"] = self.formatStack(record.stack_info)
        for key, value in [*self._mapped(record), *get_record_extra(record).items()]:
            log.setdefault(key, value)
        return json.dumps(log, default=_jsonable)


####################################################################################################
# Setup
####################################################################################################


def get_queue_handler_listener() -> logging.handlers.QueueListener:
    """Listener of the "queue" handler installed by `configure`."""
    queue_handler = logging.getHandlerByName("queue")
    if not isinstance(queue_handler, logging.handlers.QueueHandler):
        msg = f"Expected a `QueueHandler`, got {type(queue_handler)}"
        raise TypeError(msg)
    listener = cast(logging.handlers.QueueListener | None, queue_handler.listener)  # type: ignore[]
    if listener is None:
        msg = "QueueHandler().listener is None"
        raise TypeError(msg)
    return listener


def stop_listener() -> None:
    """Flush and stop the queue listener, if one runs."""
    with contextlib.suppress(TypeError):
        listener = get_queue_handler_listener()
        if listener._thread is not None:  # noqa: SLF001
            listener.stop()


def load_config(
    config_file: str | PathLike[str] = CONFIG_FILE,
    *,
    level: str | int = "INFO",
    log_file: Path | None = None,
) -> dict[str, Any]:
    """Load the `dictConfig` document, set the package level and the optional log file."""
    with Path(config_file).open() as file:
        config: dict[str, Any] = json.load(file)
    config["loggers"]["planefield"]["level"] = level
    if log_file is None:
        del config["handlers"]["file"]
        queue_handlers: list[str] = config["handlers"]["queue"]["handlers"]
        queue_handlers.remove("file")
    else:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        config["handlers"]["file"]["filename"] = str(log_file)
    return config


def configure(
    config_file: str | PathLike[str] = CONFIG_FILE,
    *,
    level: str | int = "INFO",
    log_file: Path | None = None,
) -> None:
    """Setup logging.

    Safe to call more than once: a running listener is stopped before the new one starts.
    """
    stop_listener()
    logging.config.dictConfig(load_config(config_file, level=level, log_file=log_file))
    get_queue_handler_listener().start()
    atexit.unregister(stop_listener)
    atexit.register(stop_listener)
