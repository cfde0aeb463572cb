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
Deterministic seed streams.

Master seeds expand to per-job seeds through a splitmix64 stream, and the same
mixer hashes lattice cell indices so lazily evaluated random fields give the
same value for a cell no matter which window asked for it first.
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL_1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL_2 = np.uint64(0x94D049BB133111EB)
_SEED_MASK = (1 << 63) - 1


def _to_uint64(values: ArrayLike) -> NDArray[np.uint64]:
    arr = np.atleast_1d(np.asarray(values))
    if arr.dtype.kind == "u":
        return arr.astype(np.uint64)
    # signed indices wrap two's-complement style
    return arr.astype(np.int64).astype(np.uint64)


def mix64(values: ArrayLike) -> NDArray[np.uint64]:
    """Apply the splitmix64 finaliser element-wise."""
    z = _to_uint64(values).copy()
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MUL_1
        z = (z ^ (z >> np.uint64(27))) * _MUL_2
        z = z ^ (z >> np.uint64(31))
    return z


def expand_seeds(master_seed: int, count: int) -> list[int]:
    """
    Expand a master seed into ``count`` per-job seeds.

    The k-th seed is splitmix64(master + (k + 1) * golden), truncated to 63 bits
    so it round-trips through JSON and numpy's SeedSequence unchanged.

    Args:
        master_seed: Non-negative master seed
        count: Number of seeds to produce

    Returns:
        List of per-job seeds
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return []
    steps = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        states = _to_uint64(master_seed & 0xFFFFFFFFFFFFFFFF) + steps * _GOLDEN
    return [int(v) & _SEED_MASK for v in mix64(states)]


def hash_uniform(seed: int, *keys: ArrayLike) -> NDArray[np.float64]:
    """
    Hash (seed, key_1, ..., key_k) to uniforms in [0, 1).

    Keys are broadcast against each other; the result has the broadcast shape.

    Args:
        seed: Realization seed
        keys: Integer index arrays (cell coordinates, stream ids)

    Returns:
        Array of uniforms with the broadcast shape of ``keys``
    """
    arrays = np.broadcast_arrays(*[np.asarray(k) for k in keys]) if keys else [np.zeros(1)]
    shape = arrays[0].shape
    if arrays[0].size == 0:
        return np.zeros(shape, dtype=np.float64)
    state = np.full(arrays[0].size, mix64(seed & 0xFFFFFFFFFFFFFFFF)[0], dtype=np.uint64)
    with np.errstate(over="ignore"):
        for key in arrays:
            state = mix64(state ^ (_to_uint64(key.ravel()) + _GOLDEN))
    uniforms = (state >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    return uniforms.reshape(shape)
