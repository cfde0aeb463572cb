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
"""Solver package: grid functions, the monotone scheme and the three PDE solvers."""

from homogenization_lab.solver.cauchy import CauchySolution, solve_cauchy, solve_effective_cauchy
from homogenization_lab.solver.discounted import DiscountedSolveResult, minimum_viscosity, solve_discounted
from homogenization_lab.solver.grid_fn import GridFn
from homogenization_lab.solver.metric import MetricSolveResult, solve_metric

__all__ = [
    "CauchySolution",
    "DiscountedSolveResult",
    "GridFn",
    "MetricSolveResult",
    "minimum_viscosity",
    "solve_cauchy",
    "solve_discounted",
    "solve_effective_cauchy",
    "solve_metric",
]
