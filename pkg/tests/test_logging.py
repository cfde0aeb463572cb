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
Tests for structured logging and the run identifiers bound into it.
"""

import json
import logging
from io import StringIO

import numpy as np
import pytest
import structlog

from homogenization_lab import logging as lab_logging
from homogenization_lab.cli.context import run_context
from homogenization_lab.models.run_config import parse_run_config


@pytest.fixture
def captured_json():
    """Route JSON log lines into a buffer; restores console logging afterwards."""
    original = logging.root.handlers.copy()
    stream = StringIO()
    lab_logging.configure_logging(log_json=True)
    logging.root.handlers = [logging.StreamHandler(stream)]
    try:
        yield stream
    finally:
        logging.root.handlers = original
        lab_logging.configure_logging(log_json=False)


def _last_line(stream: StringIO) -> dict:
    return json.loads(stream.getvalue().strip().splitlines()[-1])


class TestProcessors:
    """Tests for the custom processors."""

    def test_numpy_values_become_builtins(self) -> None:
        event = lab_logging.numpy_to_builtin(
            None,
            "info",
            {"residual": np.float64(1e-9), "iterations": np.int64(12), "p": np.array([0.5, -1.0])},
        )

        assert event == {"residual": 1e-9, "iterations": 12, "p": [0.5, -1.0]}
        assert type(event["iterations"]) is int

    def test_large_arrays_are_summarised(self) -> None:
        event = lab_logging.numpy_to_builtin(None, "info", {"v": np.zeros((41, 41))})

        assert event["v"] == "<array shape=(41, 41) dtype=float64>"

    @pytest.mark.parametrize(
        ("level", "severity"),
        [("debug", "DEBUG"), ("info", "INFO"), ("warning", "WARNING"), ("error", "ERROR"), ("odd", "DEFAULT")],
    )
    def test_severity(self, level: str, severity: str) -> None:
        assert lab_logging.add_severity_field(None, "", {"level": level})["severity"] == severity


class TestConfigureLogging:
    """Tests for configure_logging."""

    def test_json_lines_carry_context_and_metrics(self, captured_json: StringIO) -> None:
        logger = lab_logging.get_logger("solver")
        structlog.contextvars.bind_contextvars(run_id="run-1")
        try:
            logger.info("discounted_converged", residual=np.float64(2.5e-10), iterations=np.int64(7))
        finally:
            structlog.contextvars.unbind_contextvars("run_id")

        line = _last_line(captured_json)
        assert line["event"] == "discounted_converged"
        assert line["run_id"] == "run-1"
        assert line["iterations"] == 7
        assert line["severity"] == "INFO"

    def test_matplotlib_is_quieted(self) -> None:
        lab_logging.configure_logging(log_level="DEBUG")
        try:
            assert logging.getLogger("matplotlib").level == logging.WARNING
        finally:
            lab_logging.configure_logging()


def test_run_context_binds_identifiers(tmp_path) -> None:
    """A run binds run_id, config_hash and command for its duration only."""
    config = parse_run_config({"environment": {"family": "periodic_cosine", "amplitude": 0.0}})

    with run_context("classify", config, tmp_path) as ctx:
        bound = structlog.contextvars.get_contextvars()
        assert bound["run_id"] == ctx.run_id
        assert bound["config_hash"] == config.config_hash()
        assert bound["command"] == "classify"

    bound = structlog.contextvars.get_contextvars()
    assert "run_id" not in bound
    assert "config_hash" not in bound
