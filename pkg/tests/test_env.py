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
Tests for random environments.
"""

import math
import pickle

import numpy as np
import pytest
from scipy.stats import ks_2samp

from homogenization_lab.env import (
    PeriodicCosine,
    PoissonBumps,
    RandomCheckerboard,
    RandomFourier,
    potential,
    realize,
)
from homogenization_lab.errors import ConfigurationError, DomainRangeError
from homogenization_lab.models.environment import EnvSpec
from homogenization_lab.seeding import expand_seeds

RANDOM_SPECS = [
    {"family": "random_checkerboard", "amplitude": 0.5, "smoothing_radius": 0.2},
    {"family": "random_fourier", "amplitude": 0.5, "mode_count": 8},
    {"family": "poisson_bumps", "amplitude": 0.5, "smoothing_radius": 0.2, "bump_intensity": 0.5},
]


def _spec(raw: dict, dimension: int = 1) -> EnvSpec:
    return EnvSpec(dimension=dimension, **raw)


def _points(dimension: int, count: int = 200, spread: float = 20.0) -> np.ndarray:
    rng = np.random.default_rng(0)
    shape = (count,) if dimension == 1 else (count, 2)
    return rng.uniform(-spread, spread, size=shape)


class TestEnvSpec:
    """Tests for EnvSpec validation."""

    def test_discontinuous_family_needs_smoothing(self) -> None:
        """Test that checkerboards without mollification are rejected."""
        with pytest.raises(ValueError, match="smoothing_radius"):
            EnvSpec(family="random_checkerboard", amplitude=1.0)

    def test_zero_amplitude_needs_no_smoothing(self) -> None:
        """Test that V = 0 checkerboards are accepted without smoothing."""
        spec = EnvSpec(family="random_checkerboard", amplitude=0.0)
        assert spec.is_deterministic

    def test_cosine_is_deterministic(self) -> None:
        assert EnvSpec(family="periodic_cosine").is_deterministic

    def test_fourier_is_random(self) -> None:
        assert not EnvSpec(family="random_fourier").is_deterministic

    def test_dimension_bounds(self) -> None:
        """Test that only dimensions 1 and 2 are accepted."""
        with pytest.raises(ValueError):
            EnvSpec(family="periodic_cosine", dimension=3)


class TestRealize:
    """Tests for realize."""

    def test_family_dispatch(self) -> None:
        """Test that each family builds its realization class."""
        assert isinstance(realize({"family": "periodic_cosine"}, 0), PeriodicCosine)
        assert isinstance(realize(_spec(RANDOM_SPECS[0]), 0), RandomCheckerboard)
        assert isinstance(realize(_spec(RANDOM_SPECS[1]), 0), RandomFourier)
        assert isinstance(realize(_spec(RANDOM_SPECS[2]), 0), PoissonBumps)

    def test_invalid_mapping(self) -> None:
        """Test that an invalid raw spec raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            realize({"family": "white_noise"}, 0)

    def test_negative_seed(self) -> None:
        with pytest.raises(ConfigurationError):
            realize({"family": "periodic_cosine"}, -1)

    @pytest.mark.parametrize("raw", RANDOM_SPECS)
    @pytest.mark.parametrize("dimension", [1, 2])
    def test_deterministic_per_seed(self, raw: dict, dimension: int) -> None:
        """Test that (spec, seed) fixes the potential."""
        spec = _spec(raw, dimension)
        y = _points(dimension)
        np.testing.assert_array_equal(realize(spec, 5).potential(y), realize(spec, 5).potential(y))

    @pytest.mark.parametrize("raw", RANDOM_SPECS)
    def test_seeds_differ(self, raw: dict) -> None:
        """Test that different seeds give different potentials."""
        spec = _spec(raw)
        y = _points(1)
        assert not np.allclose(realize(spec, 1).potential(y), realize(spec, 2).potential(y))

    @pytest.mark.parametrize("raw", RANDOM_SPECS)
    @pytest.mark.parametrize("dimension", [1, 2])
    def test_amplitude_bound(self, raw: dict, dimension: int) -> None:
        """Test that |V| never exceeds the amplitude."""
        spec = _spec(raw, dimension)
        values = realize(spec, 3).potential(_points(dimension, count=2000))
        assert np.all(np.abs(values) <= spec.amplitude + 1e-12)

    @pytest.mark.parametrize("raw", RANDOM_SPECS)
    @pytest.mark.parametrize("dimension", [1, 2])
    def test_lipschitz_bound(self, raw: dict, dimension: int) -> None:
        """Test that sampled difference quotients respect the certified constant."""
        spec = _spec(raw, dimension)
        env = realize(spec, 4)
        y = _points(dimension, count=500, spread=5.0)
        step = 1e-3 * (np.ones_like(y) if dimension == 1 else np.array([0.6, 0.8]))
        quotient = np.abs(env.potential(y + step) - env.potential(y)) / 1e-3
        assert np.all(quotient <= env.lipschitz * (1 + 1e-6) + 1e-9)

    def test_window_extension_keeps_values(self) -> None:
        """Test that evaluating far points first does not change near values."""
        spec = _spec(RANDOM_SPECS[2])
        near = np.linspace(-3.0, 3.0, 61)
        fresh = realize(spec, 8).potential(near)
        env = realize(spec, 8)
        env.potential(np.linspace(-200.0, 200.0, 4001))
        np.testing.assert_array_equal(env.potential(near), fresh)

    def test_window_limit(self) -> None:
        """Test that windowed families refuse queries beyond window_limit."""
        spec = EnvSpec(family="random_checkerboard", amplitude=1.0, smoothing_radius=0.2, window_limit=10.0)
        env = realize(spec, 0)
        env.potential([9.0])
        with pytest.raises(DomainRangeError):
            env.potential([11.0])

    def test_pickle_round_trip(self) -> None:
        """Test that realizations ship to worker processes unchanged."""
        spec = _spec(RANDOM_SPECS[2], 2)
        env = realize(spec, 6)
        y = _points(2, count=50, spread=4.0)
        before = env.potential(y)
        clone = pickle.loads(pickle.dumps(env))
        np.testing.assert_array_equal(clone.potential(y), before)


class TestPotentialShapes:
    """Tests for point-array conventions."""

    def test_1d_batch_shape(self) -> None:
        env = realize({"family": "periodic_cosine"}, 0)
        assert potential(env, np.zeros((3, 4))).shape == (3, 4)

    def test_2d_trailing_axis(self) -> None:
        env = realize({"family": "periodic_cosine", "dimension": 2}, 0)
        assert env.potential(np.zeros((5, 2))).shape == (5,)
        with pytest.raises(ValueError):
            env.potential(np.zeros((5, 3)))

    def test_zero_amplitude(self) -> None:
        """Test that amplitude 0 gives V = 0 everywhere."""
        spec = EnvSpec(family="random_fourier", amplitude=0.0)
        assert np.all(realize(spec, 1).potential(_points(1)) == 0.0)


class TestPeriodicCosine:
    """Tests for the periodic cosine potential."""

    def test_values(self) -> None:
        env = realize({"family": "periodic_cosine", "amplitude": 2.0, "length_scale": 4.0}, 0)
        np.testing.assert_allclose(env.potential([0.0, 1.0, 2.0]), [2.0, 0.0, -2.0], atol=1e-12)

    def test_seed_ignored(self) -> None:
        y = np.linspace(-1.0, 1.0, 11)
        spec = {"family": "periodic_cosine"}
        np.testing.assert_array_equal(realize(spec, 0).potential(y), realize(spec, 99).potential(y))

    def test_lipschitz(self) -> None:
        env = realize({"family": "periodic_cosine", "amplitude": 1.0, "length_scale": 1.0}, 0)
        assert env.lipschitz == pytest.approx(2.0 * math.pi)


class TestTranslation:
    """Tests for the stationary group action."""

    @pytest.mark.parametrize("raw", [{"family": "periodic_cosine"}, *RANDOM_SPECS])
    def test_translated_shifts_argument(self, raw: dict) -> None:
        """Test that V(y, tau_z omega) = V(y + z, omega)."""
        env = realize(EnvSpec(**raw), 2)
        y = np.linspace(-4.0, 4.0, 81)
        z = 1.37
        np.testing.assert_allclose(env.translated([z]).potential(y), env.potential(y + z), atol=1e-12)

    def test_translated_2d(self) -> None:
        env = realize(_spec(RANDOM_SPECS[0], 2), 2)
        y = _points(2, count=30, spread=3.0)
        z = np.array([0.5, -1.25])
        np.testing.assert_allclose(env.translated(z).potential(y), env.potential(y + z), atol=1e-12)

    def test_translation_dimension_checked(self) -> None:
        env = realize({"family": "periodic_cosine"}, 0)
        with pytest.raises(ValueError):
            env.translated([1.0, 2.0])


class TestStationaryLaw:
    """Cross-seed statistics of randomized families."""

    SEEDS = 200
    SIGNIFICANCE = 0.01

    @pytest.mark.parametrize("raw", RANDOM_SPECS)
    def test_shift_preserves_marginals(self, raw: dict) -> None:
        """Test that V(y_i) and V(y_i + z) pass a two-sample KS test over 200 seeds."""
        spec = _spec(raw)
        y = np.array([0.0, 0.37, 1.3])
        z = 2.71
        envs = [realize(spec, s) for s in expand_seeds(2024, self.SEEDS)]
        base = np.array([env.potential(y) for env in envs])
        shifted = np.array([env.potential(y + z) for env in envs])

        # familywise level over the sample points
        for i in range(y.size):
            assert ks_2samp(base[:, i], shifted[:, i]).pvalue > self.SIGNIFICANCE / y.size

    def test_shift_preserves_marginals_2d(self) -> None:
        spec = _spec(RANDOM_SPECS[0], 2)
        y = np.array([[0.0, 0.0], [0.4, -0.7]])
        z = np.array([1.9, 3.3])
        envs = [realize(spec, s) for s in expand_seeds(77, self.SEEDS)]
        base = np.array([env.potential(y) for env in envs])
        shifted = np.array([env.potential(y + z) for env in envs])

        for i in range(len(y)):
            assert ks_2samp(base[:, i], shifted[:, i]).pvalue > self.SIGNIFICANCE / len(y)

    def test_fourier_mean_at_origin(self) -> None:
        """Test that the mean of V(0) over 200 seeds is within 3 standard errors of 0."""
        spec = EnvSpec(family="random_fourier", amplitude=1.0)
        values = np.array([realize(spec, s).potential(np.zeros(1))[0] for s in expand_seeds(9, self.SEEDS)])

        stderr = values.std(ddof=1) / math.sqrt(values.size)
        assert stderr > 0.0
        assert abs(values.mean()) <= 3.0 * stderr


class TestFixedFixtures:
    """Tests for realizations with randomization switched off."""

    @staticmethod
    def _slope(spec: EnvSpec, seed: int) -> float:
        step = 1e-4
        e1 = np.array([step]) if spec.dimension == 1 else np.array([[step, 0.0]])
        env = realize(spec, seed)
        return float((env.potential(e1) - env.potential(-e1))[0] / (2.0 * step))

    @pytest.mark.parametrize("dimension", [1, 2])
    def test_checkerboard_slope_positive_for_every_seed(self, dimension: int) -> None:
        spec = EnvSpec(
            family="random_checkerboard", dimension=dimension, amplitude=0.5, smoothing_radius=0.2, randomize=False
        )
        origin = np.zeros(1) if dimension == 1 else np.zeros((1, 2))
        for seed in range(10):
            assert self._slope(spec, seed) > 1.0
            assert realize(spec, seed).potential(origin)[0] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("dimension", [1, 2])
    def test_fourier_slope_negative_for_every_seed(self, dimension: int) -> None:
        spec = EnvSpec(family="random_fourier", dimension=dimension, amplitude=0.5, randomize=False)
        for seed in range(10):
            env = realize(spec, seed)
            assert np.all(env.wave_vectors[:, 0] >= 0.0)
            assert self._slope(spec, seed) < 0.0

    def test_randomized_fourier_slope_changes_sign(self) -> None:
        spec = EnvSpec(family="random_fourier", amplitude=0.5)
        slopes = [self._slope(spec, seed) for seed in range(20)]
        assert min(slopes) < 0.0 < max(slopes)
