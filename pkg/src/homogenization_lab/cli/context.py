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
Run context: identifiers, artifact writer and the run manifest.

The run id and config hash are bound into structlog's contextvars for the whole
run, so every log line of a run can be correlated with its manifest.
"""

import time
import uuid
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import structlog

from homogenization_lab import __version__
from homogenization_lab.artifacts import ArtifactWriter
from homogenization_lab.models.report import ExperimentReport, RunManifest
from homogenization_lab.models.run_config import RunConfig

MANIFEST_NAME = "manifest.json"


@dataclass
class RunContext:
    """
    State of one CLI run.

    Attributes:
        command: Subcommand name
        config: Validated run config
        writer: Artifact writer rooted at the output directory
        run_id: Unique run identifier
        config_hash: sha256 of the canonical config
        started_at: ISO timestamp
        reports: Reports produced so far
    """

    command: str
    config: RunConfig
    writer: ArtifactWriter
    run_id: str
    config_hash: str
    started_at: str
    reports: list[ExperimentReport] = field(default_factory=list)
    _clock: float = field(default_factory=time.perf_counter)

    @property
    def workers(self) -> int | None:
        return self.config.run.workers

    def add_report(self, report: ExperimentReport) -> ExperimentReport:
        self.reports.append(report)
        self.writer.json(f"{report.name}.json", report)
        return report

    @property
    def passed(self) -> bool:
        """Every report passed (partial and skipped reports do not fail a run)."""
        return all(r.status != "failed" for r in self.reports)

    def write_manifest(self, exit_code: int) -> RunManifest:
        manifest = RunManifest(
            command=self.command,
            tool_version=__version__,
            run_id=self.run_id,
            config_hash=self.config_hash,
            config=self.config.model_dump(mode="json"),
            seeds=self.config.seed_list(),
            started_at=self.started_at,
            wall_clock_seconds=time.perf_counter() - self._clock,
            artifacts=[*self.writer.written, MANIFEST_NAME],
            exit_code=exit_code,
            passed=self.passed if self.reports else None,
        )
        self.writer.json(MANIFEST_NAME, manifest)
        return manifest


@contextmanager
def run_context(command: str, config: RunConfig, out_dir: str | Path) -> Iterator[RunContext]:
    """Bind run identifiers into the logging context for the duration of a run."""
    ctx = RunContext(
        command=command,
        config=config,
        writer=ArtifactWriter(out_dir),
        run_id=str(uuid.uuid4()),
        config_hash=config.config_hash(),
        started_at=datetime.now(timezone.utc).isoformat(),
    )
    structlog.contextvars.bind_contextvars(run_id=ctx.run_id, config_hash=ctx.config_hash, command=command)
    try:
        yield ctx
    finally:
        structlog.contextvars.unbind_contextvars("run_id", "config_hash", "command")
