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
Exception hierarchy shared by the solvers, estimators and the CLI.

The CLI maps these onto its exit-code contract: configuration-type errors exit
with 2, computational failures with 1.
"""

from typing import Any


class LabError(Exception):
    """Base exception for homogenization-lab errors."""

    pass


class ConfigurationError(LabError):
    """
    Raised when a spec or run configuration is invalid.

    This includes non-positive scales, unsupported dimensions, CFL or
    monotonicity violations and environment/Hamiltonian mismatches.
    """

    pass


class PreconditionViolation(LabError):
    """
    Raised when an operation's precondition fails.

    Attributes:
        witness: Optional payload locating the violation (a probe point, a node)
    """

    def __init__(self, message: str, witness: dict[str, Any] | None = None):
        super().__init__(message)
        self.witness = witness or {}


class DomainRangeError(LabError):
    """Raised when a query leaves a realization window, table coverage or lattice window."""

    pass


class SolverDivergenceError(LabError):
    """
    Raised when an iterative solver fails to converge or produces NaN values.

    Attributes:
        residual_history: Residuals recorded before giving up
    """

    def __init__(self, message: str, residual_history: list[float] | None = None):
        super().__init__(message)
        self.residual_history = residual_history or []


class NoSubsolutionError(SolverDivergenceError):
    """Raised when the metric problem level admits no discrete subsolution."""

    pass


class TableBuildError(LabError):
    """
    Raised when a lattice node fails during effective-table construction.

    Attributes:
        partial: Manifest of the nodes completed before the failure
    """

    def __init__(self, message: str, partial: list[dict[str, Any]] | None = None):
        super().__init__(message)
        self.partial = partial or []
