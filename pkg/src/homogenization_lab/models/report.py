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
Experiment reports and run manifests.

Every criterion stores the metric name, comparison and threshold it was judged
by, so pass flags can be recomputed from a stored report.
"""

import operator
from collections.abc import Callable
from typing import Any, Literal

from pydantic import BaseModel, Field

SCHEMA_VERSION = "1"

Comparison = Literal["le", "lt", "ge", "gt"]
ReportStatus = Literal["passed", "failed", "skipped", "partial"]

_COMPARATORS: dict[str, Callable[[float, float], bool]] = {
    "le": operator.le,
    "lt": operator.lt,
    "ge": operator.ge,
    "gt": operator.gt,
}


class Criterion(BaseModel):
    """
    One pass/fail criterion: ``metrics[metric] <comparison> threshold``.
    """

    metric: str = Field(..., description="Metric name in the report")
    comparison: Comparison = Field(..., description="Comparison operator")
    threshold: float = Field(..., description="Threshold")
    passed: bool = Field(..., description="Outcome")

    @classmethod
    def judge(cls, metric: str, value: float, comparison: Comparison, threshold: float) -> "Criterion":
        return cls(
            metric=metric,
            comparison=comparison,
            threshold=threshold,
            passed=bool(_COMPARATORS[comparison](value, threshold)),
        )

    def recompute(self, metrics: dict[str, float]) -> bool:
        return bool(_COMPARATORS[self.comparison](metrics[self.metric], self.threshold))


class ExperimentReport(BaseModel):
    """
    Outcome of one experiment.

    Attributes:
        schema_version: Report schema version
        name: Experiment name
        status: passed, failed, skipped or partial
        scope: Optional scope label (e.g. outside-theorem-scope)
        inputs: Experiment inputs
        metrics: Scalar metrics referenced by criteria
        series: Named numeric series (per-eps errors, ratio profiles)
        criteria: Pass/fail criteria
        artifacts: Relative paths of files written for this report
        notes: Free-form remarks (skip reasons, clipped scales)
    """

    schema_version: str = Field(default=SCHEMA_VERSION)
    name: str = Field(..., description="Experiment name")
    status: ReportStatus = Field(..., description="Overall status")
    scope: str | None = Field(default=None, description="Scope label")
    inputs: dict[str, Any] = Field(default_factory=dict)
    metrics: dict[str, float] = Field(default_factory=dict)
    series: dict[str, list[float]] = Field(default_factory=dict)
    criteria: list[Criterion] = Field(default_factory=list)
    artifacts: list[str] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "passed"

    def recompute_passed(self) -> bool:
        """Re-judge every criterion from the stored metrics."""
        return all(c.recompute(self.metrics) for c in self.criteria)


def finalize_report(
    name: str,
    inputs: dict[str, Any],
    metrics: dict[str, float],
    criteria: list[Criterion],
    series: dict[str, list[float]] | None = None,
    notes: list[str] | None = None,
    scope: str | None = None,
    partial: bool = False,
) -> ExperimentReport:
    """Assemble a report, deriving its status from the criteria."""
    status: ReportStatus = "passed" if all(c.passed for c in criteria) else "failed"
    if partial and status == "passed":
        status = "partial"
    return ExperimentReport(
        name=name,
        status=status,
        scope=scope,
        inputs=inputs,
        metrics=metrics,
        series=series or {},
        criteria=criteria,
        notes=notes or [],
    )


def skipped_report(name: str, inputs: dict[str, Any], reason: str) -> ExperimentReport:
    return ExperimentReport(name=name, status="skipped", inputs=inputs, notes=[reason])


class RunManifest(BaseModel):
    """
    Everything needed to reproduce a CLI run.

    Attributes:
        schema_version: Manifest schema version
        command: CLI subcommand
        tool_version: homogenization-lab version
        run_id: Unique run identifier
        config_hash: sha256 of the canonical run config
        config: The run config itself
        seeds: Seeds used by the run's jobs
        started_at: ISO timestamp
        wall_clock_seconds: Duration
        artifacts: Relative paths written
        exit_code: Process exit code
        passed: Whether every report passed (None when not applicable)
    """

    schema_version: str = Field(default=SCHEMA_VERSION)
    command: str
    tool_version: str
    run_id: str
    config_hash: str
    config: dict[str, Any]
    seeds: list[int] = Field(default_factory=list)
    started_at: str
    wall_clock_seconds: float = 0.0
    artifacts: list[str] = Field(default_factory=list)
    exit_code: int = 0
    passed: bool | None = None
