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
Tests for configuration management.

Validates the Settings class and environment variable handling.
"""

import os
from unittest.mock import patch

import pytest
from pydantic import ValidationError

from homogenization_lab.config import Settings


def test_settings_defaults():
    """Test that settings have sensible defaults."""
    with patch.dict(os.environ, {}, clear=True):
        settings = Settings()

        assert settings.log_level == "INFO"
        assert settings.log_json is False
        assert settings.job_workers == 0
        assert settings.max_grid_nodes == 2_000_000
        assert settings.max_solver_iterations == 200_000
        assert settings.surgery_probes == 10_000


def test_settings_from_env():
    """Test that settings are loaded from environment variables."""
    env = {
        "LOG_LEVEL": "DEBUG",
        "LOG_JSON": "true",
        "JOB_WORKERS": "3",
        "MAX_GRID_NODES": "5000",
        "MAX_SOLVER_ITERATIONS": "100",
        "SURGERY_PROBES": "50",
    }

    with patch.dict(os.environ, env, clear=True):
        settings = Settings()

        assert settings.log_level == "DEBUG"
        assert settings.log_json is True
        assert settings.job_workers == 3
        assert settings.max_grid_nodes == 5000
        assert settings.max_solver_iterations == 100
        assert settings.surgery_probes == 50


def test_case_insensitive_env():
    """Test that environment variables are case-insensitive."""
    with patch.dict(os.environ, {"job_workers": "2"}, clear=True):
        settings = Settings()
        assert settings.job_workers == 2


def test_log_level_is_normalised():
    """Test that log levels are upper-cased."""
    with patch.dict(os.environ, {"LOG_LEVEL": "warning"}, clear=True):
        settings = Settings()
        assert settings.log_level == "WARNING"


def test_log_level_invalid():
    """Test that an unknown log level raises ValidationError."""
    with patch.dict(os.environ, {"LOG_LEVEL": "LOUD"}, clear=True):
        with pytest.raises(ValidationError) as exc_info:
            Settings()

    assert "Invalid log level" in str(exc_info.value)


def test_negative_workers_rejected():
    """Test that a negative worker count is rejected."""
    with patch.dict(os.environ, {"JOB_WORKERS": "-1"}, clear=True):
        with pytest.raises(ValidationError):
            Settings()


def test_effective_workers_explicit():
    """Test that an explicit worker count is used as is."""
    with patch.dict(os.environ, {"JOB_WORKERS": "4"}, clear=True):
        assert Settings().effective_workers == 4


def test_effective_workers_zero_uses_cpu_count():
    """Test that 0 workers resolves to the machine's CPU count."""
    with patch.dict(os.environ, {"JOB_WORKERS": "0"}, clear=True):
        with patch("homogenization_lab.config.os.cpu_count", return_value=6):
            assert Settings().effective_workers == 6


def test_effective_workers_unknown_cpu_count():
    """Test the fallback when the CPU count is unavailable."""
    with patch.dict(os.environ, {}, clear=True):
        with patch("homogenization_lab.config.os.cpu_count", return_value=None):
            assert Settings().effective_workers == 1
