#!/usr/bin/env python3
"""Diagnostics: severity-tagged run messages carried into every report.

Priority levels (module-level constants):
    INFO    = 0
    WARNING = 1
    ERROR   = 2

Usage::

    diag = Diagnostics()
    diag.receive_message(WARNING, "clipboard unavailable", "no copy backend")
    report["diagnostics"] = diag.to_json()

Each message is also forwarded to the ``matchinglab`` logger at the
corresponding logging level.
"""

import datetime
import logging
from dataclasses import dataclass
from typing import List, Optional

log = logging.getLogger("matchinglab")

# ---------------------------------------------------------------------------
# Priority constants
# ---------------------------------------------------------------------------

INFO = 0
WARNING = 1
ERROR = 2

_LABELS: dict[int, str] = {
    INFO: "INFO",
    WARNING: "WARN",
    ERROR: "ERR",
}

_LOG_LEVELS: dict[int, int] = {
    INFO: logging.INFO,
    WARNING: logging.WARNING,
    ERROR: logging.ERROR,
}


def GetDateTime() -> tuple:
    """Return (date, time, time_for_filename, milliseconds) strings for now."""
    current_datetime = datetime.datetime.now()
    date = str(current_datetime.date().strftime("%Y-%m-%d"))
    curr_time = str(current_datetime.time().strftime("%H:%M:%S"))
    curr_time_file = str(current_datetime.time().strftime("%H-%M-%S"))
    milliseconds = str(current_datetime.time().strftime("%f"))[:-3]

    return date, curr_time, curr_time_file, milliseconds


@dataclass(frozen=True)
class DiagnosticEntry:
    level: int
    message: str
    detail: str
    timestamp: str

    def format(self) -> str:
        text = f"{self.timestamp} [{_LABELS.get(self.level, '?')}] {self.message}"
        return text + (f" ({self.detail})" if self.detail else "")

    def to_json(self) -> dict:
        return {
            "level": _LABELS.get(self.level, "?"),
            "message": self.message,
            "detail": self.detail,
            "time": self.timestamp,
        }


class Diagnostics:
    """Ordered message history with the highest severity seen so far."""

    def __init__(self) -> None:
        self._history: List[DiagnosticEntry] = []

    def receive_message(self, priority: int, message: str, detail: str = "") -> None:
        if priority not in _LABELS:
            priority = INFO
        _, ts, _, ms = GetDateTime()
        entry = DiagnosticEntry(priority, message, detail, f"{ts}.{ms}")
        self._history.append(entry)
        log.log(_LOG_LEVELS[priority], "%s%s", message, f" ({detail})" if detail else "")

    def info(self, message: str, detail: str = "") -> None:
        self.receive_message(INFO, message, detail)

    def warning(self, message: str, detail: str = "") -> None:
        self.receive_message(WARNING, message, detail)

    def error(self, message: str, detail: str = "") -> None:
        self.receive_message(ERROR, message, detail)

    @property
    def entries(self) -> List[DiagnosticEntry]:
        return list(self._history)

    @property
    def worst(self) -> Optional[int]:
        return max((e.level for e in self._history), default=None)

    def clear(self) -> None:
        self._history.clear()

    def lines(self) -> List[str]:
        return [e.format() for e in self._history]

    def to_json(self) -> list:
        return [e.to_json() for e in self._history]
