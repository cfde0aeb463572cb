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
Tests for Hamiltonian specs, evaluation, bounds and modified Hamiltonians.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from homogenization_lab.env import realize
from homogenization_lab.errors import ConfigurationError, PreconditionViolation
from homogenization_lab.hamiltonian import (
    Hamiltonian,
    as_gradient,
    build,
    convexified_alpha_bar,
    evaluate,
    make_convexified,
    make_surgery,
    sublevel_equal_check,
)
from homogenization_lab.models.environment import EnvSpec
from homogenization_lab.models.hamiltonian import HamiltonianSpec


class TestHamiltonianSpec:
    """Tests for HamiltonianSpec validation."""

    def test_base_family_requires_env(self) -> None:
        with pytest.raises(ValidationError, match="requires env_spec"):
            HamiltonianSpec(family="eikonal")

    def test_modified_family_requires_base(self, flat_env_1d: EnvSpec) -> None:
        with pytest.raises(ValidationError, match="requires a base spec"):
            HamiltonianSpec(family="convexified", radius=2.0, env_spec=flat_env_1d)

    def test_surgery_requires_alpha_bar(self, flat_double_well_1d: HamiltonianSpec) -> None:
        with pytest.raises(ValidationError, match="alpha_bar"):
            HamiltonianSpec(family="surgery", base=flat_double_well_1d, radius=2.0)

    def test_env_inherited(self, flat_double_well_1d: HamiltonianSpec) -> None:
        spec = HamiltonianSpec(family="convexified", base=flat_double_well_1d, radius=2.0)
        assert spec.resolved_env_spec == flat_double_well_1d.env_spec
        assert spec.dimension == 1

    def test_build_from_mapping(self) -> None:
        ham = build({"family": "quadratic", "env_spec": {"family": "periodic_cosine"}})
        assert ham.family == "quadratic"

    def test_build_invalid_mapping(self) -> None:
        with pytest.raises(ConfigurationError):
            build({"family": "cubic", "env_spec": {"family": "periodic_cosine"}})


class TestEvaluate:
    """Tests for H(p, y, omega)."""

    def test_eikonal_plus_potential(self, cosine_eikonal_1d: HamiltonianSpec) -> None:
        env = realize(cosine_eikonal_1d.resolved_env_spec, 0)
        values = evaluate(cosine_eikonal_1d, -2.0, np.array([0.0, 0.5]), env)
        np.testing.assert_allclose(values, [3.0, 1.0], atol=1e-12)

    def test_double_well(self, flat_double_well_1d: HamiltonianSpec) -> None:
        env = realize(flat_double_well_1d.resolved_env_spec, 0)
        values = evaluate(flat_double_well_1d, 2.0, np.zeros(1), env)
        assert values[0] == pytest.approx(9.0)

    def test_constant(self, flat_env_1d: EnvSpec) -> None:
        spec = HamiltonianSpec(family="quadratic", env_spec=flat_env_1d, constant=-0.5)
        env = realize(flat_env_1d, 0)
        assert evaluate(spec, 1.0, np.zeros(1), env)[0] == pytest.approx(0.5)

    def test_2d_norm(self, flat_eikonal_2d: HamiltonianSpec) -> None:
        env = realize(flat_eikonal_2d.resolved_env_spec, 0)
        assert evaluate(flat_eikonal_2d, [3.0, 4.0], np.zeros((1, 2)), env)[0] == pytest.approx(5.0)

    def test_env_mismatch(self, cosine_eikonal_1d: HamiltonianSpec, flat_env_1d: EnvSpec) -> None:
        """Test that a realization of another law is rejected."""
        with pytest.raises(ConfigurationError):
            evaluate(cosine_eikonal_1d, 1.0, np.zeros(1), realize(flat_env_1d, 0))

    def test_gradient_matches_finite_difference(self, flat_double_well_1d: HamiltonianSpec) -> None:
        ham = Hamiltonian(flat_double_well_1d)
        q = np.array([[0.3], [1.7], [-2.2]])
        step = 1e-6
        numeric = (ham.value(q + step, 0.0) - ham.value(q - step, 0.0)) / (2 * step)
        np.testing.assert_allclose(ham.gradient(q, 0.0)[:, 0], numeric, rtol=1e-5)

    def test_scalar_gradient_only_in_1d(self) -> None:
        assert as_gradient(2.0, 1).shape == (1,)
        with pytest.raises(ValueError):
            as_gradient(2.0, 2)


class TestBounds:
    """Tests for coercivity, sublevel radius and Lipschitz bounds."""

    @pytest.mark.parametrize("family", ["eikonal", "quadratic", "double_well"])
    def test_coercivity_is_nondecreasing(self, family: str) -> None:
        env = EnvSpec(family="periodic_cosine", amplitude=0.5)
        ham = Hamiltonian(HamiltonianSpec(family=family, env_spec=env))
        moduli = [ham.coercivity_modulus(r) for r in np.linspace(0.0, 5.0, 51)]
        assert all(b >= a - 1e-12 for a, b in zip(moduli, moduli[1:]))
        assert moduli[-1] > moduli[0]

    @pytest.mark.parametrize("family", ["eikonal", "quadratic", "double_well"])
    def test_sublevel_radius_contains_sublevel_set(self, family: str) -> None:
        """Test that every probe with H <= level lies inside B_r(level)."""
        env = EnvSpec(family="periodic_cosine", amplitude=0.5)
        ham = Hamiltonian(HamiltonianSpec(family=family, env_spec=env))
        level = 2.0
        radius = ham.sublevel_radius(level)
        q = np.linspace(-6.0, 6.0, 2401)[:, None]
        for v in (-0.5, 0.0, 0.5):
            inside = ham.value(q, v) <= level
            assert np.all(np.abs(q[inside, 0]) <= radius + 1e-12)

    def test_eikonal_sublevel_radius(self, cosine_eikonal_1d: HamiltonianSpec) -> None:
        assert Hamiltonian(cosine_eikonal_1d).sublevel_radius(2.0) == pytest.approx(3.0)

    def test_lipschitz_p_double_well(self, flat_double_well_1d: HamiltonianSpec) -> None:
        """Test that lipschitz_p bounds |G'| on the ball."""
        ham = Hamiltonian(flat_double_well_1d)
        r = np.linspace(0.0, 1.5, 301)
        assert np.max(np.abs(4.0 * r * (r**2 - 1.0))) <= ham.lipschitz_p(1.5) + 1e-12

    def test_upper_and_lower(self, cosine_eikonal_1d: HamiltonianSpec) -> None:
        ham = Hamiltonian(cosine_eikonal_1d)
        assert ham.upper_at(2.0) == pytest.approx(3.0)
        assert ham.lower_at(2.0) == pytest.approx(1.0)

    def test_bound(self, flat_double_well_1d: HamiltonianSpec) -> None:
        assert Hamiltonian(flat_double_well_1d).bound(2.0) == pytest.approx(9.0)


class TestConvexified:
    """Tests for the convexified Hamiltonian."""

    def test_equal_outside_ball(self, flat_double_well_1d: HamiltonianSpec) -> None:
        spec = make_convexified(flat_double_well_1d, 2.0)
        base, convex = Hamiltonian(flat_double_well_1d), Hamiltonian(spec)
        q = np.linspace(2.0, 4.0, 41)[:, None]
        np.testing.assert_allclose(convex.value(q, 0.0), base.value(q, 0.0))

    def test_convex_inside_ball(self, flat_double_well_1d: HamiltonianSpec) -> None:
        """Test that second differences of the radial profile are nonnegative."""
        convex = Hamiltonian(make_convexified(flat_double_well_1d, 2.0))
        q = np.linspace(-4.0, 4.0, 801)[:, None]
        values = convex.value(q, 0.0)
        assert np.all(np.diff(values, 2) >= -1e-9)

    def test_tangent_line(self, flat_double_well_1d: HamiltonianSpec) -> None:
        convex = Hamiltonian(make_convexified(flat_double_well_1d, 2.0))
        # G(2) = 9, G'(2) = 24
        assert float(convex.value(np.array([1.5]), 0.0)) == pytest.approx(9.0 - 12.0)

    def test_radius_inside_nonmonotone_range(self, flat_double_well_1d: HamiltonianSpec) -> None:
        with pytest.raises(ConfigurationError):
            make_convexified(flat_double_well_1d, 0.5)

    def test_alpha_bar(self, flat_double_well_1d: HamiltonianSpec) -> None:
        spec = make_convexified(flat_double_well_1d, 2.0)
        assert convexified_alpha_bar(spec) == pytest.approx(9.0)


class TestSurgery:
    """Tests for the clamped Hamiltonian."""

    def test_clamp_and_outer_branch(self, flat_double_well_1d: HamiltonianSpec) -> None:
        spec = make_surgery(flat_double_well_1d, alpha_bar=1.0, radius=2.0, probes=500)
        ham = Hamiltonian(spec)
        assert float(ham.value(np.array([0.0]), 0.0)) == pytest.approx(1.0)
        assert float(ham.value(np.array([1.0]), 0.0)) == pytest.approx(0.0)
        assert float(ham.value(np.array([1.5]), 0.0)) == pytest.approx(1.0)
        assert float(ham.value(np.array([3.0]), 0.0)) == pytest.approx(9.0 - 4.0 + 1.0)

    def test_precondition_violation(self, flat_double_well_1d: HamiltonianSpec) -> None:
        """Test that a sublevel set reaching outside B_R is refused with a witness."""
        with pytest.raises(PreconditionViolation) as exc_info:
            make_surgery(flat_double_well_1d, alpha_bar=20.0, radius=2.0, probes=500)

        witness = exc_info.value.witness
        assert witness["value"] <= 20.0
        assert abs(witness["q"][0]) >= 2.0

    def test_nonpositive_radius(self, flat_double_well_1d: HamiltonianSpec) -> None:
        with pytest.raises(ConfigurationError):
            make_surgery(flat_double_well_1d, alpha_bar=1.0, radius=0.0)

    def test_coercivity_beyond_radius(self, flat_double_well_1d: HamiltonianSpec) -> None:
        ham = Hamiltonian(make_surgery(flat_double_well_1d, alpha_bar=1.0, radius=2.0, probes=500))
        assert ham.coercivity_modulus(3.0) == pytest.approx(6.0)
        assert ham.sublevel_radius(1.0) == pytest.approx(2.0)


class TestSublevelEqualCheck:
    """Tests for sublevel_equal_check."""

    def test_convexified_agrees_above_alpha_bar(self, flat_double_well_1d: HamiltonianSpec) -> None:
        spec = make_convexified(flat_double_well_1d, 2.0)
        report = sublevel_equal_check(flat_double_well_1d, spec, alpha=20.0, probes=2000)
        assert report.equal
        assert report.probes == 2000

    def test_convexified_differs_below_alpha_bar(self, flat_double_well_1d: HamiltonianSpec) -> None:
        """Test that at level 0.5 the non-convex well and its tangent extension differ."""
        spec = make_convexified(flat_double_well_1d, 2.0)
        report = sublevel_equal_check(flat_double_well_1d, spec, alpha=0.5, probes=2000)
        assert not report.equal
        assert report.witnesses
        witness = report.witnesses[0]
        assert (witness["h1"] <= 0.5) != (witness["h2"] <= 0.5) or (witness["h1"] >= 0.5) != (witness["h2"] >= 0.5)

    def test_identical_hamiltonians(self, cosine_eikonal_1d: HamiltonianSpec) -> None:
        report = sublevel_equal_check(cosine_eikonal_1d, cosine_eikonal_1d, alpha=1.5, probes=500)
        assert report.disagreements == 0

    def test_dimension_mismatch(self, flat_eikonal_1d: HamiltonianSpec, flat_eikonal_2d: HamiltonianSpec) -> None:
        with pytest.raises(ConfigurationError):
            sublevel_equal_check(flat_eikonal_1d, flat_eikonal_2d, alpha=1.0, probes=10)


def test_double_well_sublevel_radius() -> None:
    """Test r(level) for the double well against (r^2 - 1)^2 = level + amp."""
    env = EnvSpec(family="periodic_cosine", amplitude=0.25)
    ham = Hamiltonian(HamiltonianSpec(family="double_well", env_spec=env))
    assert ham.sublevel_radius(0.75) == pytest.approx(math.sqrt(2.0))
