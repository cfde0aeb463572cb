# Copyright 2025 John Brosnihan
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Structured logging for solver runs.

Console rendering for desk runs, JSON lines (with a severity field) for batch
runs whose logs sit next to the run manifest. Solver metrics are often numpy
scalars or small arrays; they are converted to plain Python values before
rendering.
"""

import logging
import sys
from typing import Any

import numpy as np
import structlog
from structlog.types import EventDict, Processor

from homogenization_lab.config import settings

# arrays longer than this are logged by shape only
MAX_LOGGED_ARRAY = 16

NOISY_LOGGERS = ("matplotlib", "PIL")

SEVERITIES = frozenset({"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"})


def _builtin(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        if value.size > MAX_LOGGED_ARRAY:
            return f"<array shape={value.shape} dtype={value.dtype}>"
        return value.tolist()
    return value


def numpy_to_builtin(logger: Any, method_name: str, event_dict: EventDict) -> EventDict:
    """Replace numpy scalars and small arrays by builtins; large arrays by a summary."""
    return {key: _builtin(value) for key, value in event_dict.items()}


def add_severity_field(logger: Any, method_name: str, event_dict: EventDict) -> EventDict:
    level = str(event_dict.get("level", "")).upper()
    event_dict["severity"] = level if level in SEVERITIES else "DEFAULT"
    return event_dict


def configure_logging(log_level: str | None = None, log_json: bool | None = None) -> None:
    """
    Configure structlog on top of the stdlib root logger.

    Worker processes import this module and pick up the same configuration.

    Args:
        log_level: Override for settings.log_level
        log_json: Override for settings.log_json
    """
    level = getattr(logging, (log_level or settings.log_level).upper(), logging.INFO)
    use_json = settings.log_json if log_json is None else log_json

    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level)
    logging.getLogger().setLevel(level)
    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(max(level, logging.WARNING))

    processors: list[Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.format_exc_info,
        numpy_to_builtin,
    ]
    if use_json:
        processors += [add_severity_field, structlog.processors.JSONRenderer()]
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=False))

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def get_logger(name: str = __name__) -> structlog.stdlib.BoundLogger:
    return structlog.get_logger(name)


configure_logging()
