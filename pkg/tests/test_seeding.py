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
Tests for deterministic seed streams.
"""

import json

import numpy as np

from homogenization_lab.seeding import expand_seeds, hash_uniform, mix64


class TestExpandSeeds:
    """Tests for expand_seeds."""

    def test_deterministic(self) -> None:
        """Test that the same master seed gives the same stream."""
        assert expand_seeds(42, 8) == expand_seeds(42, 8)

    def test_prefix_stable(self) -> None:
        """Test that asking for more seeds extends the stream without changing it."""
        assert expand_seeds(3, 12)[:5] == expand_seeds(3, 5)

    def test_distinct_masters(self) -> None:
        """Test that different master seeds give different streams."""
        assert expand_seeds(0, 4) != expand_seeds(1, 4)

    def test_seeds_are_json_safe(self) -> None:
        """Test that seeds fit in 63 bits and survive a JSON round trip."""
        seeds = expand_seeds(7, 16)
        assert all(0 <= s < 2**63 for s in seeds)
        assert json.loads(json.dumps(seeds)) == seeds
        assert len(set(seeds)) == 16

    def test_zero_count(self) -> None:
        """Test that zero seeds are allowed."""
        assert expand_seeds(5, 0) == []


class TestHashUniform:
    """Tests for hash_uniform."""

    def test_range(self) -> None:
        """Test that uniforms lie in [0, 1)."""
        values = hash_uniform(11, np.arange(-500, 500))
        assert values.shape == (1000,)
        assert np.all(values >= 0.0)
        assert np.all(values < 1.0)

    def test_query_order_independent(self) -> None:
        """Test that a cell's value does not depend on which batch asked for it."""
        full = hash_uniform(9, 0, np.arange(20))
        part = hash_uniform(9, 0, np.arange(10, 15))
        np.testing.assert_array_equal(full[10:15], part)

    def test_broadcast_shape(self) -> None:
        """Test that keys broadcast against each other."""
        values = hash_uniform(1, np.arange(3)[:, None], np.arange(4)[None, :])
        assert values.shape == (3, 4)

    def test_seed_changes_values(self) -> None:
        """Test that different seeds give different fields."""
        keys = np.arange(50)
        assert not np.array_equal(hash_uniform(1, keys), hash_uniform(2, keys))

    def test_roughly_uniform(self) -> None:
        """Test that the mean of many hashed cells is close to 1/2."""
        values = hash_uniform(123, np.arange(100_000))
        assert abs(float(np.mean(values)) - 0.5) < 0.01


def test_mix64_is_bijective_on_sample() -> None:
    """Test that the mixer does not collide on consecutive integers."""
    mixed = mix64(np.arange(10_000, dtype=np.uint64))
    assert np.unique(mixed).size == 10_000
