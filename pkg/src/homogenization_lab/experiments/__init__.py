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
"""Verification experiments; each returns an ExperimentReport."""

from homogenization_lab.experiments.corrector import corrector_sublinearity, growth_ratios
from homogenization_lab.experiments.homogenization import OUTSIDE_SCOPE, homogenization_run
from homogenization_lab.experiments.metric import metric_scaling, msubsolution_check, probe_points, zero_ray
from homogenization_lab.experiments.surgery import check_regime, surgery_equivalence

__all__ = [
    "OUTSIDE_SCOPE",
    "check_regime",
    "corrector_sublinearity",
    "growth_ratios",
    "homogenization_run",
    "metric_scaling",
    "msubsolution_check",
    "probe_points",
    "surgery_equivalence",
    "zero_ray",
]
