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
Random environments.

``realize(spec, seed)`` turns an environment law into a concrete potential
y -> V(y, omega). Realizations are deterministic functions of (spec, seed) and
are evaluated lazily, so windows may be extended without changing values that
were already observed. ``translated(z)`` gives the stationary group action
tau_z, V(y, tau_z omega) = V(y + z, omega).

Point arrays: in 1D any array of coordinates; in 2D an array whose last axis
has length 2. Potential values have the point array's batch shape.
"""

import copy
import math
import threading
from abc import ABC, abstractmethod
from collections.abc import Mapping
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import ValidationError

from homogenization_lab.errors import ConfigurationError, DomainRangeError
from homogenization_lab.logging import get_logger
from homogenization_lab.models.environment import EnvSpec
from homogenization_lab.seeding import hash_uniform

logger = get_logger(__name__)

# Hash stream ids, kept apart so offsets never correlate with cell values.
_STREAM_VALUES = 0
_STREAM_OFFSET = 1


def _as_points(y: ArrayLike, dimension: int) -> NDArray[np.float64]:
    points = np.asarray(y, dtype=np.float64)
    if dimension == 2 and (points.ndim == 0 or points.shape[-1] != 2):
        raise ValueError("2D points must have a trailing axis of length 2")
    return points


class EnvironmentRealization(ABC):
    """
    One realization of a stationary random potential.

    Subclasses implement ``_evaluate`` on unshifted coordinates; the base class
    applies the translation and window checks.
    """

    def __init__(self, spec: EnvSpec, seed: int):
        self.spec = spec
        self.seed = int(seed)
        self.shift = np.zeros(spec.dimension)

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    @abstractmethod
    def lipschitz(self) -> float:
        """Constant L_V with |V(y1) - V(y2)| <= L_V |y1 - y2|."""

    @abstractmethod
    def _evaluate(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        """Evaluate V at unshifted points (same conventions as ``potential``)."""

    def potential(self, y: ArrayLike) -> NDArray[np.float64]:
        """
        Evaluate V(y, omega).

        Args:
            y: Points (see module docstring for the shape convention)

        Returns:
            Potential values with the batch shape of ``y``

        Raises:
            DomainRangeError: If a windowed family is queried beyond window_limit
        """
        points = _as_points(y, self.dimension)
        if self.dimension == 1:
            shifted = points + self.shift[0]
        else:
            shifted = points + self.shift
        if self.spec.is_windowed and shifted.size:
            reach = float(np.max(np.abs(shifted)))
            if reach > self.spec.window_limit:
                raise DomainRangeError(
                    f"query at |y|_inf={reach:.6g} exceeds window_limit={self.spec.window_limit:.6g}"
                )
        if self.spec.amplitude == 0:
            batch = shifted.shape if self.dimension == 1 else shifted.shape[:-1]
            return np.zeros(batch)
        return self._evaluate(shifted)

    def translated(self, z: ArrayLike) -> "EnvironmentRealization":
        """
        Return the realization translated by ``z``: V'(y) = V(y + z).

        Lazily generated window data is shared with the original.
        """
        offset = np.atleast_1d(np.asarray(z, dtype=np.float64))
        if offset.shape != (self.dimension,):
            raise ValueError(f"translation must have {self.dimension} coordinates")
        clone = copy.copy(self)
        clone.shift = self.shift + offset
        return clone

    def __repr__(self) -> str:
        return f"{type(self).__name__}(family={self.spec.family!r}, seed={self.seed})"


class PeriodicCosine(EnvironmentRealization):
    """amp * cos(2 pi y / l) in 1D, amp * (cos + cos) / 2 in 2D. The seed is ignored."""

    @property
    def lipschitz(self) -> float:
        k = 2.0 * math.pi / self.spec.length_scale
        if self.dimension == 1:
            return self.spec.amplitude * k
        return self.spec.amplitude * k / math.sqrt(2.0)

    def _evaluate(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        k = 2.0 * math.pi / self.spec.length_scale
        if self.dimension == 1:
            return self.spec.amplitude * np.cos(k * points)
        return 0.5 * self.spec.amplitude * (np.cos(k * points[..., 0]) + np.cos(k * points[..., 1]))


def _raised_cosine_cdf(w: NDArray[np.float64], radius: float) -> NDArray[np.float64]:
    """CDF of the kernel (1 + cos(pi w / r)) / (2 r) supported on [-r, r]."""
    clipped = np.clip(w, -radius, radius)
    return (clipped + radius) / (2.0 * radius) + np.sin(math.pi * clipped / radius) / (2.0 * math.pi)


class RandomCheckerboard(EnvironmentRealization):
    """
    Mollified checkerboard with iid uniform cell values in [-amp, amp].

    The raw field is piecewise constant on cells of side l shifted by a random
    offset; it is convolved with a separable raised-cosine kernel of radius r,
    which has a closed-form CDF so the convolution is exact.

    With ``randomize`` off the cells are anchored at the origin and the cells
    touching it are pinned to -amp for y_1 < 0 and +amp for y_1 > 0, so
    d_1 V(0) > 0 for every seed.
    """

    def __init__(self, spec: EnvSpec, seed: int):
        super().__init__(spec, seed)
        if spec.randomize:
            axes = np.arange(spec.dimension)
            self.offset = hash_uniform(self.seed, _STREAM_OFFSET, axes) * spec.length_scale
        else:
            self.offset = np.zeros(spec.dimension)
        self._span = int(math.ceil(2.0 * spec.smoothing_radius / spec.length_scale)) + 1

    @property
    def lipschitz(self) -> float:
        spec = self.spec
        per_axis = (
            2.0
            * spec.amplitude
            / spec.smoothing_radius
            * (1 + math.floor(2.0 * spec.smoothing_radius / spec.length_scale))
        )
        return per_axis * math.sqrt(spec.dimension)

    def _cell_values(self, *indices: NDArray[np.int64]) -> NDArray[np.float64]:
        amp = self.spec.amplitude
        u = hash_uniform(self.seed, _STREAM_VALUES, *indices)
        values = amp * (2.0 * u - 1.0)
        if self.spec.randomize:
            return values
        near = (indices[1] >= -1) & (indices[1] <= 0) if len(indices) > 1 else True
        values = np.where(near & (indices[0] == 0), amp, values)
        return np.where(near & (indices[0] == -1), -amp, values)

    def _axis_weights(
        self, coords: NDArray[np.float64], axis: int
    ) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
        # For each point: first cell index touched by the kernel and the kernel
        # mass falling into that cell and the following (span - 1) cells.
        ell = self.spec.length_scale
        r = self.spec.smoothing_radius
        origin = self.offset[axis]
        first = np.floor((coords - r - origin) / ell).astype(np.int64)
        steps = np.arange(self._span)
        lower = origin + (first[..., None] + steps) * ell
        weights = _raised_cosine_cdf(coords[..., None] - lower, r) - _raised_cosine_cdf(
            coords[..., None] - lower - ell, r
        )
        return first, weights

    def _evaluate(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        steps = np.arange(self._span)
        if self.dimension == 1:
            first, weights = self._axis_weights(points, 0)
            values = self._cell_values(first[..., None] + steps)
            return np.sum(values * weights, axis=-1)
        first_1, weights_1 = self._axis_weights(points[..., 0], 0)
        first_2, weights_2 = self._axis_weights(points[..., 1], 1)
        cells_1 = (first_1[..., None] + steps)[..., :, None]
        cells_2 = (first_2[..., None] + steps)[..., None, :]
        values = self._cell_values(cells_1, cells_2)
        return np.einsum("...ij,...i,...j->...", values, weights_1, weights_2)


class RandomFourier(EnvironmentRealization):
    """
    Random trigonometric field (amp / M) * sum_k cos(omega_k . y + phi_k).

    Wave numbers have magnitude (2 pi / l) * (1/2 + U) with uniform random
    directions and phases are uniform on [0, 2 pi). With ``randomize`` off every
    phase is pi / 2 and every wave vector has a nonnegative first component, so
    d_1 V(0) = -(amp / M) sum_k omega_k1 < 0 for every seed.
    """

    def __init__(self, spec: EnvSpec, seed: int):
        super().__init__(spec, seed)
        rng = np.random.default_rng(self.seed)
        m = spec.mode_count
        magnitudes = (2.0 * math.pi / spec.length_scale) * (0.5 + rng.random(m))
        if spec.dimension == 1:
            directions = np.where(rng.random(m) < 0.5, -1.0, 1.0)[:, None]
        else:
            angles = rng.uniform(0.0, 2.0 * math.pi, size=m)
            directions = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        phases = rng.uniform(0.0, 2.0 * math.pi, size=m)
        if not spec.randomize:
            directions[:, 0] = np.abs(directions[:, 0])
            phases = np.full(m, 0.5 * math.pi)
        self.wave_vectors = magnitudes[:, None] * directions
        self.phases = phases

    @property
    def lipschitz(self) -> float:
        norms = np.linalg.norm(self.wave_vectors, axis=-1)
        return float(self.spec.amplitude * np.sum(norms) / self.spec.mode_count)

    def _evaluate(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        pts = points[..., None] if self.dimension == 1 else points
        arguments = pts @ self.wave_vectors.T + self.phases
        return self.spec.amplitude * np.mean(np.cos(arguments), axis=-1)


def _zigzag(index: int) -> int:
    return 2 * index if index >= 0 else -2 * index - 1


class PoissonBumps(EnvironmentRealization):
    """
    Union of bumps of diameter l around Poisson centres.

    S = 1 - prod_b (1 - chi_b) with chi_b = 1 on the core ball of radius l / 2
    and a raised-cosine ramp of width r outside it; V = amp * (2 S - 1).
    Centres are drawn block by block from a SeedSequence keyed by the block
    index, so every block is generated once and independently of query order.
    Block counts are truncated far in the Poisson tail so L_V is finite.
    """

    def __init__(self, spec: EnvSpec, seed: int):
        super().__init__(spec, seed)
        self.core = 0.5 * spec.length_scale
        self.reach = self.core + spec.smoothing_radius
        self.block = 2.0 * self.reach
        mean = spec.bump_intensity * self.block**spec.dimension
        self._mean_count = mean
        self._count_cap = int(math.ceil(mean + 10.0 * math.sqrt(mean) + 10.0))
        self._blocks: dict[tuple[int, ...], NDArray[np.float64]] = {}
        self._lock = threading.Lock()

    def __getstate__(self) -> dict[str, Any]:
        state = self.__dict__.copy()
        state["_blocks"] = {}
        del state["_lock"]
        return state

    def __setstate__(self, state: dict[str, Any]) -> None:
        self.__dict__.update(state)
        self._lock = threading.Lock()

    @property
    def lipschitz(self) -> float:
        # Any point sees centres from at most 2^d blocks.
        ramp_slope = math.pi / (2.0 * self.spec.smoothing_radius)
        overlap = (2**self.dimension) * self._count_cap
        return 2.0 * self.spec.amplitude * ramp_slope * overlap

    def _block_centres(self, key: tuple[int, ...]) -> NDArray[np.float64]:
        with self._lock:
            cached = self._blocks.get(key)
            if cached is not None:
                return cached
            rng = np.random.default_rng([self.seed, *(_zigzag(k) for k in key)])
            count = min(int(rng.poisson(self._mean_count)), self._count_cap)
            origin = np.asarray(key, dtype=np.float64) * self.block
            centres = origin + rng.random((count, self.dimension)) * self.block
            self._blocks[key] = centres
            return centres

    def _centres_near(self, lower: NDArray[np.float64], upper: NDArray[np.float64]) -> NDArray[np.float64]:
        first = np.floor((lower - self.reach) / self.block).astype(int)
        last = np.floor((upper + self.reach) / self.block).astype(int)
        ranges = [range(a, b + 1) for a, b in zip(first, last)]
        keys = [(i,) for i in ranges[0]] if self.dimension == 1 else [
            (i, j) for i in ranges[0] for j in ranges[1]
        ]
        blocks = [self._block_centres(key) for key in keys]
        if not blocks:
            return np.zeros((0, self.dimension))
        return np.concatenate(blocks, axis=0)

    def _evaluate(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        pts = points[..., None] if self.dimension == 1 else points
        batch = pts.shape[:-1]
        flat = pts.reshape(-1, self.dimension)
        survival = np.ones(flat.shape[0])
        chunk = 4096
        for start in range(0, flat.shape[0], chunk):
            block_pts = flat[start : start + chunk]
            centres = self._centres_near(block_pts.min(axis=0), block_pts.max(axis=0))
            if centres.shape[0] == 0:
                continue
            dist = np.linalg.norm(block_pts[:, None, :] - centres[None, :, :], axis=-1)
            ramp = np.clip((dist - self.core) / self.spec.smoothing_radius, 0.0, 1.0)
            chi = 0.5 * (1.0 + np.cos(math.pi * ramp))
            survival[start : start + chunk] = np.prod(1.0 - chi, axis=-1)
        covered = 1.0 - survival
        return (self.spec.amplitude * (2.0 * covered - 1.0)).reshape(batch)


_FAMILIES: dict[str, type[EnvironmentRealization]] = {
    "periodic_cosine": PeriodicCosine,
    "random_checkerboard": RandomCheckerboard,
    "random_fourier": RandomFourier,
    "poisson_bumps": PoissonBumps,
}


def coerce_env_spec(spec: EnvSpec | Mapping[str, Any]) -> EnvSpec:
    """
    Validate a raw mapping into an EnvSpec.

    Raises:
        ConfigurationError: If validation fails
    """
    if isinstance(spec, EnvSpec):
        return spec
    try:
        return EnvSpec.model_validate(dict(spec))
    except ValidationError as e:
        raise ConfigurationError(f"invalid environment spec: {e}") from e


def realize(spec: EnvSpec | Mapping[str, Any], seed: int) -> EnvironmentRealization:
    """
    Realize an environment law for one seed.

    Args:
        spec: Environment spec (or a mapping validated into one)
        seed: Realization seed

    Returns:
        Deterministic realization of (spec, seed)

    Raises:
        ConfigurationError: If the spec is invalid
    """
    env_spec = coerce_env_spec(spec)
    if seed < 0:
        raise ConfigurationError(f"seed must be non-negative, got {seed}")
    realization = _FAMILIES[env_spec.family](env_spec, seed)
    logger.debug("environment_realized", family=env_spec.family, seed=seed)
    return realization


def potential(env: EnvironmentRealization, y: ArrayLike) -> NDArray[np.float64]:
    """Evaluate V(y, omega) for a realization."""
    return env.potential(y)
