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
Pytest configuration and fixtures.

Provides small grids and Hamiltonian specs shared across the test suite. Job
pools run inline (one worker) so tests never spawn processes, and the surgery
probe count is lowered to keep precondition checks fast.
"""

from pathlib import Path

import pytest

from homogenization_lab.config import settings
from homogenization_lab.models.environment import EnvSpec
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.hamiltonian import HamiltonianSpec


@pytest.fixture(autouse=True)
def inline_jobs(monkeypatch: pytest.MonkeyPatch) -> None:
    """Run every job pool in the calling process."""
    monkeypatch.setattr(settings, "job_workers", 1)
    monkeypatch.setattr(settings, "surgery_probes", 2_000)


@pytest.fixture
def flat_env_1d() -> EnvSpec:
    """V = 0 in one dimension."""
    return EnvSpec(family="periodic_cosine", dimension=1, amplitude=0.0)


@pytest.fixture
def flat_env_2d() -> EnvSpec:
    """V = 0 in two dimensions."""
    return EnvSpec(family="periodic_cosine", dimension=2, amplitude=0.0)


@pytest.fixture
def cosine_env_1d() -> EnvSpec:
    """V(y) = cos(2 pi y)."""
    return EnvSpec(family="periodic_cosine", dimension=1, amplitude=1.0, length_scale=1.0)


@pytest.fixture
def flat_eikonal_1d(flat_env_1d: EnvSpec) -> HamiltonianSpec:
    return HamiltonianSpec(family="eikonal", env_spec=flat_env_1d)


@pytest.fixture
def flat_eikonal_2d(flat_env_2d: EnvSpec) -> HamiltonianSpec:
    return HamiltonianSpec(family="eikonal", env_spec=flat_env_2d)


@pytest.fixture
def flat_double_well_1d(flat_env_1d: EnvSpec) -> HamiltonianSpec:
    return HamiltonianSpec(family="double_well", env_spec=flat_env_1d)


@pytest.fixture
def cosine_eikonal_1d(cosine_env_1d: EnvSpec) -> HamiltonianSpec:
    return HamiltonianSpec(family="eikonal", env_spec=cosine_env_1d)


@pytest.fixture
def small_grid_1d() -> Grid:
    """[-2, 2] with h = 0.1 (41 nodes)."""
    return Grid(dimension=1, half_width=2.0, spacing=0.1)


@pytest.fixture
def small_grid_2d() -> Grid:
    """[-1, 1]^2 with h = 0.1 (21 x 21 nodes)."""
    return Grid(dimension=2, half_width=1.0, spacing=0.1)


@pytest.fixture
def write_config(tmp_path: Path):
    """
    Write a TOML run config into the test's temporary directory.

    Example usage:
        def test_something(write_config):
            path = write_config("[environment]\\nfamily = 'periodic_cosine'\\n")
    """

    def _write(body: str, name: str = "run.toml") -> Path:
        path = tmp_path / name
        path.write_text(body, encoding="utf-8")
        return path

    return _write
