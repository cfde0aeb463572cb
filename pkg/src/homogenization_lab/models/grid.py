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
Uniform computational grid on the box [-L, L]^d.

Nodes sit at integer multiples of the spacing, so the origin is always a node.
The trusted interior is the half-width box |x|_inf <= L/2 where boundary
effects of the truncated domain are negligible.
"""

import math

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Relative slack when checking that L / h is an integer.
_INTEGRALITY_TOL = 1e-9


class Grid(BaseModel):
    """
    Uniform grid with 2 * L / h intervals per axis.

    Attributes:
        dimension: Spatial dimension (1 or 2)
        half_width: Half-width L of the box
        spacing: Node spacing h
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    dimension: int = Field(default=1, description="Spatial dimension", ge=1, le=2)
    half_width: float = Field(..., description="Half-width L of the box", gt=0.0)
    spacing: float = Field(..., description="Node spacing h", gt=0.0)

    @model_validator(mode="after")
    def validate_integral(self) -> "Grid":
        """
        Require L / h to be an integer so the origin is a node.

        Raises:
            ValueError: If L / h is not (numerically) an integer
        """
        ratio = self.half_width / self.spacing
        if abs(ratio - round(ratio)) > _INTEGRALITY_TOL * max(1.0, ratio) or round(ratio) < 1:
            raise ValueError(
                f"half_width / spacing must be a positive integer, got {ratio:.6g}"
            )
        return self

    @property
    def intervals_per_side(self) -> int:
        """Number of intervals between the origin and the boundary."""
        return int(round(self.half_width / self.spacing))

    @property
    def nodes_per_axis(self) -> int:
        return 2 * self.intervals_per_side + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.dimension

    @property
    def node_count(self) -> int:
        return self.nodes_per_axis**self.dimension

    @property
    def origin_index(self) -> tuple[int, ...]:
        return (self.intervals_per_side,) * self.dimension

    def axis(self) -> NDArray[np.float64]:
        """Node coordinates along one axis; exactly zero at the origin."""
        m = self.intervals_per_side
        return (np.arange(self.nodes_per_axis) - m) * self.spacing

    def coordinates(self) -> NDArray[np.float64]:
        """
        Node coordinates.

        Returns:
            Shape (n,) in 1D, shape (n, n, 2) in 2D (``ij`` indexing)
        """
        axis = self.axis()
        if self.dimension == 1:
            return axis
        x1, x2 = np.meshgrid(axis, axis, indexing="ij")
        return np.stack([x1, x2], axis=-1)

    def norms(self) -> NDArray[np.float64]:
        """Euclidean norm |x| at every node."""
        coords = self.coordinates()
        if self.dimension == 1:
            return np.abs(coords)
        return np.linalg.norm(coords, axis=-1)

    def trusted_mask(self) -> NDArray[np.bool_]:
        """Nodes with |x|_inf <= L / 2."""
        axis_ok = np.abs(self.axis()) <= 0.5 * self.half_width + 1e-12 * self.half_width
        if self.dimension == 1:
            return axis_ok
        return np.logical_and.outer(axis_ok, axis_ok)

    def interior_mask(self, margin: int = 1) -> NDArray[np.bool_]:
        """Nodes at least ``margin`` nodes away from the boundary."""
        n = self.nodes_per_axis
        idx = np.arange(n)
        axis_ok = (idx >= margin) & (idx < n - margin)
        if self.dimension == 1:
            return axis_ok
        return np.logical_and.outer(axis_ok, axis_ok)

    def node_index(self, point: float | tuple[float, ...] | NDArray[np.float64]) -> tuple[int, ...]:
        """
        Index of the node nearest to ``point``.

        Raises:
            ValueError: If the point lies outside the grid box
        """
        coords = np.atleast_1d(np.asarray(point, dtype=np.float64))
        if coords.shape != (self.dimension,):
            raise ValueError(f"point must have {self.dimension} coordinates")
        if np.any(np.abs(coords) > self.half_width * (1 + 1e-12)):
            raise ValueError(f"point {coords.tolist()} lies outside [-L, L]^d with L={self.half_width}")
        m = self.intervals_per_side
        return tuple(int(round(c / self.spacing)) + m for c in coords)

    def node_point(self, index: tuple[int, ...]) -> NDArray[np.float64]:
        """Coordinates of the node at ``index``."""
        m = self.intervals_per_side
        return (np.asarray(index, dtype=np.float64) - m) * self.spacing

    def with_half_width(self, half_width: float) -> "Grid":
        """Grid with the same spacing and a new half-width (rounded to a node)."""
        steps = max(1, math.ceil(half_width / self.spacing - _INTEGRALITY_TOL))
        return Grid(dimension=self.dimension, half_width=steps * self.spacing, spacing=self.spacing)
