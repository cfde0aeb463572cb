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
"""Node values on a Grid."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from homogenization_lab.models.grid import Grid


@dataclass(frozen=True, eq=False)
class GridFn:
    """
    Values on every node of a grid, optionally stamped with a time.

    Attributes:
        grid: Underlying grid
        values: Array of shape ``grid.shape``
        time: Time of the snapshot (evolution problems only)
    """

    grid: Grid
    values: NDArray[np.float64]
    time: float | None = None

    def __post_init__(self) -> None:
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")

    def at_origin(self) -> float:
        return float(self.values[self.grid.origin_index])

    def at(self, index: tuple[int, ...]) -> float:
        return float(self.values[index])

    def trusted_values(self) -> NDArray[np.float64]:
        """Values on the trusted interior, flattened."""
        return self.values[self.grid.trusted_mask()]

    def lipschitz(self) -> float:
        """Discrete Lipschitz constant: max |difference| / h over neighbouring nodes."""
        h = self.grid.spacing
        slopes = [np.max(np.abs(np.diff(self.values, axis=k)), initial=0.0) for k in range(self.grid.dimension)]
        return float(max(slopes) / h)

    def sup_distance(self, other: "GridFn", trusted: bool = True) -> float:
        """max |self - other| over (trusted) nodes."""
        if other.grid != self.grid:
            raise ValueError("grid functions live on different grids")
        diff = np.abs(self.values - other.values)
        if trusted:
            diff = diff[self.grid.trusted_mask()]
        return float(np.max(diff))

    def with_values(self, values: NDArray[np.float64], time: float | None = None) -> "GridFn":
        return GridFn(grid=self.grid, values=values, time=self.time if time is None else time)
