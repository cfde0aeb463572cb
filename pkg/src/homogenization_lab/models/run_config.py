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
Run configuration.

A run is described by one TOML file whose sections map onto the models below.
The canonical JSON form of the validated config is hashed into every manifest,
and a manifest's embedded config can be fed back to ``--config`` to rerun.
"""

import hashlib
import json
import math
import tomllib
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from homogenization_lab.errors import ConfigurationError
from homogenization_lab.models.effective import PLattice
from homogenization_lab.models.environment import EnvSpec
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.hamiltonian import HamiltonianSpec
from homogenization_lab.models.report import SCHEMA_VERSION
from homogenization_lab.seeding import expand_seeds
from homogenization_lab.solver.grid_fn import GridFn


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


def _positive_decreasing(values: list[float]) -> list[float]:
    if not values:
        raise ValueError("at least one value is required")
    if any(v <= 0 for v in values):
        raise ValueError("values must be positive")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValueError("values must be strictly decreasing")
    return values


class RunSection(_Section):
    """Seeds, tolerances and pool width."""

    master_seed: int = Field(default=0, description="Master seed", ge=0)
    seed_count: int = Field(default=8, description="Seeds expanded from the master seed", ge=1)
    seeds: list[int] | None = Field(default=None, description="Explicit seeds (override master_seed)")
    tol: float = Field(default=1e-8, description="Discounted solver tolerance", gt=0.0)
    workers: int | None = Field(default=None, description="Job pool width", ge=1)


class HamiltonianSection(_Section):
    """Base Hamiltonian family; the environment comes from [environment]."""

    family: Literal["eikonal", "quadratic", "double_well"] = Field(default="eikonal")
    constant: float = Field(default=0.0)


class GridSection(_Section):
    half_width: float = Field(default=20.0, gt=0.0)
    spacing: float = Field(default=0.05, gt=0.0)


class EffectiveSection(_Section):
    """Discount factors and p-lattice for estimate-hbar."""

    deltas: list[float] = Field(default_factory=lambda: [0.1, 0.05])
    method: Literal["newton", "relaxation"] = Field(default="newton")
    lattice_lower: list[float] | None = Field(default=None, description="Lattice corner (default: -2 per axis)")
    lattice_upper: list[float] | None = Field(default=None, description="Lattice corner (default: 2 per axis)")
    lattice_spacing: float = Field(default=0.25, gt=0.0)
    max_spacing: float = Field(default=0.25, gt=0.0)
    gap_threshold: float | None = Field(default=None, ge=0.0)
    oracle_tolerance: float = Field(default=0.05, gt=0.0)

    check_deltas = field_validator("deltas")(_positive_decreasing)


class ClassifySection(_Section):
    """Table source and probe points for classify."""

    table: str | None = Field(default=None, description="Effective table (.npz) to classify against")
    synthetic: Literal["abs", "quartic"] | None = Field(
        default=None, description="Analytic table sampled on the [effective] lattice"
    )
    points: list[list[float]] | None = Field(default=None, description="Points (default: every lattice node)")
    tol: float | None = Field(default=None, gt=0.0)
    overlay_levels: list[float] = Field(default_factory=list, description="Levels drawn as contour/hull overlays")


class MetricSection(_Section):
    """Metric scaling, zero-ray and mollified-subsolution runs."""

    p: list[float] | None = Field(default=None, description="Macroscopic gradient (default: 0)")
    level: float | None = Field(default=None, description="Level (default: oracle or table value at p)")
    scales: list[float] = Field(default_factory=lambda: [1.0, 0.5, 0.25])
    probes_per_axis: int = Field(default=9, ge=2)
    tol: float = Field(default=1e-6, gt=0.0)
    t_list: list[float] = Field(default_factory=list)
    zero_ray_tol: float = Field(default=0.05, gt=0.0)
    table: str | None = Field(default=None, description="Effective table (.npz) for classification")
    mollify_radius: float | None = Field(default=None, gt=0.0)
    corrector_radii: list[float] = Field(
        default_factory=list, description="Radii for the corrector growth check (empty: skip)"
    )

    check_scales = field_validator("scales")(_positive_decreasing)


class InitialDatum(_Section):
    """
    Bounded uniformly continuous initial datum.

    kinds:
        cone      offset + slope * min(|x|, clip)
        constant  offset
        plane     offset + gradient . clip_box(x, clip)
    """

    kind: Literal["cone", "constant", "plane"] = Field(default="cone")
    slope: float = Field(default=-1.0)
    gradient: list[float] | None = Field(default=None)
    clip: float | None = Field(default=None, gt=0.0)
    offset: float = Field(default=0.0)

    @model_validator(mode="after")
    def validate_kind(self) -> "InitialDatum":
        if self.kind == "plane" and self.gradient is None:
            raise ValueError("plane initial data need a gradient")
        return self

    def evaluate(self, grid: Grid) -> GridFn:
        clip = self.clip if self.clip is not None else 0.5 * grid.half_width
        if self.kind == "constant":
            values = np.full(grid.shape, self.offset)
        elif self.kind == "cone":
            values = self.offset + self.slope * np.minimum(grid.norms(), clip)
        else:
            assert self.gradient is not None
            coords = np.clip(grid.coordinates(), -clip, clip)
            if grid.dimension == 1:
                values = self.offset + self.gradient[0] * coords
            else:
                values = self.offset + coords @ np.asarray(self.gradient, dtype=np.float64)
        return GridFn(grid=grid, values=np.asarray(values, dtype=np.float64))

    def shifted(self, amount: float) -> "InitialDatum":
        return self.model_copy(update={"offset": self.offset + amount})

    def gradient_radius(self) -> float:
        """Bound on |Du0|."""
        if self.kind == "constant":
            return 0.0
        if self.kind == "cone":
            return abs(self.slope)
        assert self.gradient is not None
        return float(math.sqrt(sum(g * g for g in self.gradient)))


class HomogenizeSection(_Section):
    eps_list: list[float] = Field(default_factory=lambda: [0.25, 0.125, 0.0625])
    horizon: float = Field(default=1.0, gt=0.0)
    cfl: float = Field(default=0.5, gt=0.0, le=0.9)
    initial: InitialDatum = Field(default_factory=InitialDatum)
    threshold: float = Field(default=0.1, gt=0.0)
    table: str | None = Field(default=None, description="Effective table (.npz); default is the oracle")

    check_eps = field_validator("eps_list")(_positive_decreasing)


class SurgerySection(_Section):
    kind: Literal["clamp", "convexified"] = Field(default="convexified")
    alpha_bar: float | None = Field(default=None)
    radius: float = Field(default=2.0, gt=0.0)
    p_list: list[list[float]] = Field(default_factory=lambda: [[3.0]])
    deltas: list[float] = Field(default_factory=lambda: [0.1, 0.05])
    probes: int | None = Field(default=None, ge=1)

    check_deltas = field_validator("deltas")(_positive_decreasing)


class RunConfig(_Section):
    """Root of a run config file."""

    schema_version: str = Field(default=SCHEMA_VERSION)
    run: RunSection = Field(default_factory=RunSection)
    environment: EnvSpec
    hamiltonian: HamiltonianSection = Field(default_factory=HamiltonianSection)
    grid: GridSection = Field(default_factory=GridSection)
    effective: EffectiveSection = Field(default_factory=EffectiveSection)
    classify: ClassifySection = Field(default_factory=ClassifySection)
    metric: MetricSection = Field(default_factory=MetricSection)
    homogenize: HomogenizeSection = Field(default_factory=HomogenizeSection)
    surgery: SurgerySection = Field(default_factory=SurgerySection)

    @model_validator(mode="after")
    def validate_derived(self) -> "RunConfig":
        """
        Build the derived specs once so inconsistent blocks fail at load time.

        Raises:
            ValueError: If the grid, lattice, Hamiltonian or initial datum is inconsistent
        """
        self.make_grid()
        self.lattice()
        self.hamiltonian_spec()
        gradient = self.homogenize.initial.gradient
        if gradient is not None and len(gradient) != self.environment.dimension:
            raise ValueError("homogenize.initial.gradient must match the environment dimension")
        if any(len(p) != self.environment.dimension for p in self.surgery.p_list):
            raise ValueError("surgery.p_list entries must match the environment dimension")
        if self.metric.p is not None and len(self.metric.p) != self.environment.dimension:
            raise ValueError("metric.p must match the environment dimension")
        return self

    def hamiltonian_spec(self) -> HamiltonianSpec:
        return HamiltonianSpec(
            family=self.hamiltonian.family,
            env_spec=self.environment,
            constant=self.hamiltonian.constant,
        )

    def make_grid(self) -> Grid:
        return Grid(
            dimension=self.environment.dimension,
            half_width=self.grid.half_width,
            spacing=self.grid.spacing,
        )

    def seed_list(self) -> list[int]:
        if self.run.seeds is not None:
            return list(self.run.seeds)
        return expand_seeds(self.run.master_seed, self.run.seed_count)

    def lattice(self) -> PLattice:
        eff = self.effective
        return PLattice(
            dimension=self.environment.dimension,
            lower=tuple(eff.lattice_lower or [-2.0] * self.environment.dimension),
            upper=tuple(eff.lattice_upper or [2.0] * self.environment.dimension),
            spacing=eff.lattice_spacing,
        )

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def parse_run_config(raw: dict[str, Any]) -> RunConfig:
    """
    Validate a raw mapping.

    Raises:
        ConfigurationError: If validation fails
    """
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(f"invalid run config: {e}") from e


def load_run_config(path: str | Path) -> RunConfig:
    """
    Load a TOML run config, or the config embedded in a JSON run manifest.

    Raises:
        ConfigurationError: If the file is missing, unreadable or invalid
    """
    source = Path(path)
    if not source.is_file():
        raise ConfigurationError(f"config file not found: {source}")
    try:
        if source.suffix == ".json":
            raw = json.loads(source.read_text(encoding="utf-8"))
            raw = raw.get("config", raw)
        else:
            with source.open("rb") as fh:
                raw = tomllib.load(fh)
    except (OSError, json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigurationError(f"cannot read config {source}: {e}") from e
    return parse_run_config(raw)
