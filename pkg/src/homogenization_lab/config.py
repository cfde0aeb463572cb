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
Configuration module for homogenization-lab.

Process-level settings (logging, job pool width, memory caps) are loaded from
environment variables using Pydantic BaseSettings. Run-level parameters live in
the TOML run config, see ``homogenization_lab.models.run_config``.
"""

import os

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseSettings):
    """
    Application settings loaded from environment variables.

    All settings have defaults suitable for a laptop run.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    app_version: str = Field(default="0.1.0", description="Tool version recorded in manifests")

    # Logging Configuration
    log_level: str = Field(default="INFO", description="Logging level")
    log_json: bool = Field(
        default=False,
        description="Emit JSON log lines instead of console rendering",
    )

    # Job pool
    job_workers: int = Field(
        default=0,
        description="Worker processes for independent solves (0 = machine parallelism)",
        ge=0,
    )

    # Numerical caps
    max_grid_nodes: int = Field(
        default=2_000_000,
        description="Node cap for rescaled solves (metric scaling experiments)",
        gt=0,
    )
    max_solver_iterations: int = Field(
        default=200_000,
        description="Iteration cap for relaxation and sweeping solvers",
        gt=0,
    )
    surgery_probes: int = Field(
        default=10_000,
        description="Probe count used to validate surgery preconditions",
        gt=0,
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """
        Validate that the log level is a standard logging level name.

        Args:
            v: The level name to validate

        Returns:
            The upper-cased level name

        Raises:
            ValueError: If the level is not recognised
        """
        level = v.upper().strip()
        if level not in VALID_LOG_LEVELS:
            raise ValueError(
                f"Invalid log level '{v}'. Must be one of: {', '.join(VALID_LOG_LEVELS)}."
            )
        return level

    @property
    def effective_workers(self) -> int:
        """Resolve the worker count, mapping 0 to the machine's CPU count."""
        if self.job_workers > 0:
            return self.job_workers
        return os.cpu_count() or 1


# Global settings instance
settings = Settings()
