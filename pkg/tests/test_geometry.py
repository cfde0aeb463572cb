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
Tests for sublevel sets, convex hulls, classification and mollification.
"""

import numpy as np
import pytest

from homogenization_lab.effective import EffectiveTable
from homogenization_lab.errors import ConfigurationError, DomainRangeError, PreconditionViolation
from homogenization_lab.geometry import (
    classify,
    convex_hull,
    mollify_and_check,
    mollify_field,
    sublevel_set,
)
from homogenization_lab.models.effective import PLattice
from homogenization_lab.models.grid import Grid
from homogenization_lab.solver.grid_fn import GridFn


def _quartic(q: np.ndarray) -> np.ndarray:
    return (np.sum(q * q, axis=-1) - 1.0) ** 2


@pytest.fixture
def abs_table_1d() -> EffectiveTable:
    axis = np.linspace(-2.0, 2.0, 17)
    return EffectiveTable.from_values((axis,), np.abs(axis))


@pytest.fixture
def quartic_table_1d() -> EffectiveTable:
    lattice = PLattice(dimension=1, lower=(-2.0,), upper=(2.0,), spacing=0.25)
    return EffectiveTable.from_function(lattice, _quartic)


@pytest.fixture
def quartic_table_2d() -> EffectiveTable:
    lattice = PLattice(dimension=2, lower=(-2.0, -2.0), upper=(2.0, 2.0), spacing=0.25)
    return EffectiveTable.from_function(lattice, _quartic)


@pytest.fixture
def cone_table_2d() -> EffectiveTable:
    lattice = PLattice(dimension=2, lower=(-2.0, -2.0), upper=(2.0, 2.0), spacing=0.25)
    return EffectiveTable.from_function(lattice, lambda q: np.linalg.norm(q, axis=-1))


class TestSublevelSet:
    """Tests for sublevel_set."""

    def test_interval(self, abs_table_1d: EffectiveTable) -> None:
        sub = sublevel_set(abs_table_1d, 1.0)
        assert sub.flag == "ok"
        np.testing.assert_allclose(sub.intervals, [(-1.0, 1.0)])
        assert sub.boundary_distance(0.25) == pytest.approx(0.75)

    def test_crossing_between_nodes(self, abs_table_1d: EffectiveTable) -> None:
        sub = sublevel_set(abs_table_1d, 0.6)
        np.testing.assert_allclose(sub.intervals, [(-0.6, 0.6)])

    def test_empty_and_full(self, abs_table_1d: EffectiveTable) -> None:
        empty = sublevel_set(abs_table_1d, -1.0)
        full = sublevel_set(abs_table_1d, 5.0)

        assert empty.flag == "empty"
        assert empty.intervals == ()
        assert full.flag == "full"
        np.testing.assert_allclose(full.intervals, [(-2.0, 2.0)])

    def test_two_wells(self, quartic_table_1d: EffectiveTable) -> None:
        sub = sublevel_set(quartic_table_1d, 0.5)
        assert len(sub.intervals) == 2
        (a, b), (c, d) = sub.intervals
        assert a == pytest.approx(-d)
        assert b == pytest.approx(-c)
        assert bool(sub.contains(1.0))
        assert not bool(sub.contains(0.0))

    def test_disk_contour(self, cone_table_2d: EffectiveTable) -> None:
        sub = sublevel_set(cone_table_2d, 1.0)

        assert sub.flag == "ok"
        assert len(sub.contours) == 1
        assert sub.closed == (True,)
        radii = np.linalg.norm(sub.contours[0], axis=-1)
        np.testing.assert_allclose(radii, 1.0, atol=0.05)

    def test_contour_orientation(self, cone_table_2d: EffectiveTable) -> None:
        """Test that the sublevel side lies on the left, so the disk is traversed counter-clockwise."""
        contour = sublevel_set(cone_table_2d, 1.0).contours[0]
        x, y = contour[:, 0], contour[:, 1]
        signed_area = 0.5 * np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])
        assert signed_area > 0

    def test_annulus(self, quartic_table_2d: EffectiveTable) -> None:
        sub = sublevel_set(quartic_table_2d, 0.5)
        assert len(sub.contours) == 2
        assert all(sub.closed)


class TestConvexHull:
    """Tests for convex_hull."""

    def test_square_with_interior_point(self) -> None:
        points = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)]
        hull = convex_hull(points)

        np.testing.assert_allclose(hull.vertices, [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        assert hull.contains([0.5, 0.5])
        assert float(hull.excess(np.array([2.0, 0.5]))) == pytest.approx(1.0)
        assert hull.boundary_distance([0.5, 0.25]) == pytest.approx(0.25)
        np.testing.assert_allclose(hull.nearest_normal([0.5, -0.1]), [0.0, -1.0])

    def test_vertex_normal_is_averaged(self) -> None:
        hull = convex_hull([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
        normal = hull.nearest_normal([1.0, 1.0])
        np.testing.assert_allclose(normal, [np.sqrt(0.5), np.sqrt(0.5)])

    def test_one_dimensional(self) -> None:
        hull = convex_hull([[-1.0], [0.5], [2.0]])
        np.testing.assert_allclose(hull.vertices, [[-1.0], [2.0]])
        assert hull.contains(0.0)
        assert not hull.contains(2.5)

    def test_empty(self) -> None:
        with pytest.raises(ConfigurationError):
            convex_hull(np.zeros((0, 2)))

    def test_hull_of_annulus_fills_hole(self, quartic_table_2d: EffectiveTable) -> None:
        hull = convex_hull(sublevel_set(quartic_table_2d, 0.5))
        assert hull.contains([0.0, 0.0])
        assert not hull.contains([1.6, 0.0])

    def test_idempotent(self, cone_table_2d: EffectiveTable) -> None:
        hull = convex_hull(sublevel_set(cone_table_2d, 1.0))
        again = convex_hull(hull)
        np.testing.assert_allclose(again.vertices, hull.vertices)


class TestClassify:
    """Tests for classify."""

    def test_abs_table(self, abs_table_1d: EffectiveTable) -> None:
        extremal = classify(abs_table_1d, 1.0)
        minimal = classify(abs_table_1d, 0.0)

        assert extremal.verdict == "ExtremalBoundary"
        assert extremal.normal == pytest.approx((1.0,))
        assert minimal.verdict == "MinimalLevel"
        assert minimal.normal is None

    @pytest.mark.parametrize(
        "p,verdict",
        [(0.0, "NotCovered"), (1.0, "MinimalLevel"), (1.75, "ExtremalBoundary"), (-1.75, "ExtremalBoundary")],
    )
    def test_quartic_1d(self, quartic_table_1d: EffectiveTable, p: float, verdict: str) -> None:
        assert classify(quartic_table_1d, p).verdict == verdict

    @pytest.mark.parametrize(
        "p,verdict",
        [((1.3, 0.0), "ExtremalBoundary"), ((0.5, 0.0), "NotCovered"), ((1.0, 0.0), "MinimalLevel")],
    )
    def test_quartic_2d(self, quartic_table_2d: EffectiveTable, p: tuple[float, float], verdict: str) -> None:
        assert classify(quartic_table_2d, p).verdict == verdict

    def test_extremal_normal_points_outward(self, quartic_table_2d: EffectiveTable) -> None:
        result = classify(quartic_table_2d, (1.3, 0.0))
        assert result.normal is not None
        assert result.normal[0] > 0.9

    def test_outside_window(self, abs_table_1d: EffectiveTable) -> None:
        with pytest.raises(DomainRangeError):
            classify(abs_table_1d, 3.0)

    def test_tolerance_defaults_to_spacing(self, abs_table_1d: EffectiveTable) -> None:
        assert classify(abs_table_1d, 1.0).tol == pytest.approx(0.25)


class TestMollify:
    """Tests for mollify_field and mollify_and_check."""

    def test_radius_too_small(self) -> None:
        with pytest.raises(ConfigurationError, match="at least 2h"):
            mollify_field(np.zeros(10), 0.1, 0.15)

    def test_preserves_constants_and_interior_lines(self) -> None:
        x = np.linspace(-1.0, 1.0, 21)
        np.testing.assert_allclose(mollify_field(np.full(21, 3.0), 0.1, 0.3), 3.0)
        np.testing.assert_allclose(mollify_field(2.0 * x, 0.1, 0.3)[3:-3], 2.0 * x[3:-3], atol=1e-12)

    def test_affine_subsolution_passes(self, small_grid_1d: Grid, abs_table_1d: EffectiveTable) -> None:
        z = GridFn(grid=small_grid_1d, values=0.5 * small_grid_1d.coordinates())
        check = mollify_and_check(z, abs_table_1d, 0.5, 0.3)

        assert check.passed
        assert check.precondition_defect <= 1e-12
        assert check.checked_nodes > 0

    def test_not_a_subsolution(self, small_grid_1d: Grid, abs_table_1d: EffectiveTable) -> None:
        z = GridFn(grid=small_grid_1d, values=small_grid_1d.coordinates())
        with pytest.raises(PreconditionViolation, match="not a discrete subsolution"):
            mollify_and_check(z, abs_table_1d, 0.5, 0.3)

    def test_gradients_leave_table(self, small_grid_1d: Grid, abs_table_1d: EffectiveTable) -> None:
        z = GridFn(grid=small_grid_1d, values=3.0 * small_grid_1d.coordinates())
        with pytest.raises(PreconditionViolation) as exc_info:
            mollify_and_check(z, abs_table_1d, 5.0, 0.3)
        assert exc_info.value.witness["gradient"] == pytest.approx([3.0])
