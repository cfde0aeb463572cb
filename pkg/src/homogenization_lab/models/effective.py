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
"""Models for effective-Hamiltonian estimates, lattices and diagnostics."""

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PLattice(BaseModel):
    """
    Uniform lattice of macroscopic gradients p.

    Attributes:
        dimension: Dimension of p
        lower: Lower corner of the lattice box
        upper: Upper corner of the lattice box
        spacing: Lattice spacing (same on every axis)
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    dimension: int = Field(default=1, description="Dimension of p", ge=1, le=2)
    lower: tuple[float, ...] = Field(..., description="Lower corner")
    upper: tuple[float, ...] = Field(..., description="Upper corner")
    spacing: float = Field(..., description="Lattice spacing", gt=0.0)

    @model_validator(mode="after")
    def validate_box(self) -> "PLattice":
        """
        Check corner lengths, ordering and that the spacing divides the box.

        Raises:
            ValueError: On an inconsistent box
        """
        if len(self.lower) != self.dimension or len(self.upper) != self.dimension:
            raise ValueError("lattice corners must have `dimension` coordinates")
        for lo, hi in zip(self.lower, self.upper):
            if hi <= lo:
                raise ValueError("lattice upper corner must exceed the lower corner")
            steps = (hi - lo) / self.spacing
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                raise ValueError("lattice spacing must divide the box edges")
        return self

    def axes(self) -> tuple[NDArray[np.float64], ...]:
        """Node coordinates along each axis."""
        out = []
        for lo, hi in zip(self.lower, self.upper):
            steps = int(round((hi - lo) / self.spacing))
            out.append(lo + self.spacing * np.arange(steps + 1))
        return tuple(out)

    def points(self) -> NDArray[np.float64]:
        """All lattice points, shape (N, d), in ``ij`` order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


class EffectiveEstimate(BaseModel):
    """
    Estimate of Hbar(p) from discounted solves.

    Attributes:
        p: Macroscopic gradient
        delta_sequence: Discount factors, strictly decreasing
        seeds: Realization seeds
        per_seed_values: -delta * v(0) indexed [seed][delta]
        hbar: Extrapolated upper estimate (cross-seed max)
        hbar_low: Extrapolated lower estimate (cross-seed min), never above hbar
        uncertainty: Cross-seed standard deviation at the smallest delta
    """

    model_config = ConfigDict(frozen=True)

    p: tuple[float, ...] = Field(..., description="Macroscopic gradient")
    delta_sequence: tuple[float, ...] = Field(..., description="Discount factors")
    seeds: tuple[int, ...] = Field(..., description="Realization seeds")
    per_seed_values: tuple[tuple[float, ...], ...] = Field(..., description="-delta v(0) per seed and delta")
    hbar: float = Field(..., description="Upper estimate")
    hbar_low: float = Field(..., description="Lower estimate")
    uncertainty: float = Field(default=0.0, description="Cross-seed standard deviation", ge=0.0)

    @field_validator("delta_sequence")
    @classmethod
    def validate_deltas(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        """
        Require positive, strictly decreasing discount factors.

        Raises:
            ValueError: If the sequence is empty, non-positive or not decreasing
        """
        if not v:
            raise ValueError("delta_sequence must not be empty")
        if any(d <= 0 for d in v):
            raise ValueError("discount factors must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("delta_sequence must be strictly decreasing")
        return v

    @model_validator(mode="after")
    def validate_order(self) -> "EffectiveEstimate":
        """Ensure hbar_low <= hbar."""
        if self.hbar_low > self.hbar:
            raise ValueError("hbar_low must not exceed hbar")
        return self

    @property
    def gap(self) -> float:
        return self.hbar - self.hbar_low


class BallDiagnostic(BaseModel):
    """sup / inf of -delta v over the ball of radius R / delta (trusted part only)."""

    radius: float = Field(..., description="Ball radius R in macroscopic units")
    delta: float = Field(..., description="Discount factor")
    sup: float = Field(..., description="max of -delta v over the ball")
    inf: float = Field(..., description="min of -delta v over the ball")
    clipped: bool = Field(..., description="Ball exceeds the trusted interior")


class StationarityReport(BaseModel):
    """Cross-seed test that E[Dv(0)] vanishes."""

    p: tuple[float, ...] = Field(..., description="Macroscopic gradient")
    delta: float = Field(..., description="Discount factor")
    seeds: int = Field(..., description="Seed count")
    mean: tuple[float, ...] = Field(..., description="Mean gradient at the origin")
    stderr: tuple[float, ...] = Field(..., description="Standard error of the mean")
    passed: bool = Field(..., description="|mean| <= 3 stderr componentwise")


class DeterminismReport(BaseModel):
    """Cross-seed spread of -delta v(0) on growing windows at fixed delta * L."""

    p: tuple[float, ...] = Field(..., description="Macroscopic gradient")
    delta_times_width: float = Field(..., description="delta * L held fixed across windows")
    half_widths: tuple[float, ...] = Field(..., description="Window half-widths L")
    deltas: tuple[float, ...] = Field(..., description="Discount factor used on each window")
    seeds: int = Field(..., description="Seed count")
    spreads: tuple[float, ...] = Field(..., description="Cross-seed std of -delta v(0) per window")
    ratio: float = Field(..., description="Spread on the widest window over spread on the narrowest")
    passed: bool = Field(..., description="ratio < 1")
