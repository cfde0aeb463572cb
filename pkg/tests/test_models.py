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
Tests for the grid, lattice, estimate and report models.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from homogenization_lab.models.effective import EffectiveEstimate, PLattice
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.report import (
    SCHEMA_VERSION,
    Criterion,
    ExperimentReport,
    finalize_report,
    skipped_report,
)


class TestGrid:
    """Tests for Grid."""

    def test_layout(self) -> None:
        grid = Grid(dimension=1, half_width=2.0, spacing=0.5)

        assert grid.intervals_per_side == 4
        assert grid.nodes_per_axis == 9
        assert grid.shape == (9,)
        assert grid.origin_index == (4,)
        np.testing.assert_allclose(grid.axis(), np.linspace(-2.0, 2.0, 9))
        assert grid.axis()[4] == 0.0

    def test_non_integral_ratio(self) -> None:
        with pytest.raises(ValidationError, match="positive integer"):
            Grid(dimension=1, half_width=1.0, spacing=0.3)

    def test_two_dimensional_coordinates(self) -> None:
        grid = Grid(dimension=2, half_width=1.0, spacing=0.5)
        coords = grid.coordinates()

        assert coords.shape == (5, 5, 2)
        np.testing.assert_allclose(coords[0, 4], [-1.0, 1.0])
        assert grid.norms()[4, 4] == 0.0
        assert grid.node_count == 25

    def test_trusted_and_interior_masks(self) -> None:
        grid = Grid(dimension=1, half_width=2.0, spacing=0.5)
        np.testing.assert_array_equal(grid.trusted_mask(), np.abs(grid.axis()) <= 1.0)
        assert grid.interior_mask(2).sum() == 5

    def test_node_index_round_trip(self) -> None:
        grid = Grid(dimension=2, half_width=1.0, spacing=0.25)
        index = grid.node_index((0.5, -0.25))
        assert index == (6, 3)
        np.testing.assert_allclose(grid.node_point(index), [0.5, -0.25])

    def test_node_index_outside(self) -> None:
        grid = Grid(dimension=1, half_width=1.0, spacing=0.25)
        with pytest.raises(ValueError, match="outside"):
            grid.node_index(1.5)

    def test_with_half_width_rounds_up_to_a_node(self) -> None:
        grid = Grid(dimension=1, half_width=1.0, spacing=0.25)
        wider = grid.with_half_width(2.1)
        assert wider.half_width == pytest.approx(2.25)
        assert wider.spacing == grid.spacing


class TestPLattice:
    """Tests for PLattice."""

    def test_points(self) -> None:
        lattice = PLattice(dimension=2, lower=(-1.0, 0.0), upper=(1.0, 1.0), spacing=0.5)
        points = lattice.points()

        assert points.shape == (15, 2)
        np.testing.assert_allclose(points[0], [-1.0, 0.0])
        np.testing.assert_allclose(points[1], [-1.0, 0.5])

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"dimension": 1, "lower": (-1.0, 0.0), "upper": (1.0,), "spacing": 0.5},
            {"dimension": 1, "lower": (1.0,), "upper": (-1.0,), "spacing": 0.5},
            {"dimension": 1, "lower": (-1.0,), "upper": (1.0,), "spacing": 0.3},
        ],
    )
    def test_invalid_box(self, kwargs: dict) -> None:
        with pytest.raises(ValidationError):
            PLattice(**kwargs)


class TestEffectiveEstimate:
    """Tests for EffectiveEstimate validation."""

    def _estimate(self, **overrides: object) -> EffectiveEstimate:
        fields = {
            "p": (0.5,),
            "delta_sequence": (0.1, 0.05),
            "seeds": (0,),
            "per_seed_values": ((0.5, 0.5),),
            "hbar": 0.5,
            "hbar_low": 0.5,
        }
        fields.update(overrides)
        return EffectiveEstimate(**fields)

    def test_valid(self) -> None:
        assert self._estimate().gap == 0.0

    def test_deltas_must_decrease(self) -> None:
        with pytest.raises(ValidationError, match="strictly decreasing"):
            self._estimate(delta_sequence=(0.05, 0.1))

    def test_lower_above_upper(self) -> None:
        with pytest.raises(ValidationError, match="hbar_low"):
            self._estimate(hbar_low=0.6)


class TestReports:
    """Tests for criteria and experiment reports."""

    def test_criterion_judge_and_recompute(self) -> None:
        criterion = Criterion.judge("error", 0.02, "le", 0.05)

        assert criterion.passed
        assert criterion.recompute({"error": 0.02})
        assert not criterion.recompute({"error": 0.1})

    @pytest.mark.parametrize(
        "comparison,value,expected",
        [("le", 1.0, True), ("lt", 1.0, False), ("ge", 1.0, True), ("gt", 1.0, False)],
    )
    def test_comparisons_at_threshold(self, comparison: str, value: float, expected: bool) -> None:
        assert Criterion.judge("m", value, comparison, 1.0).passed is expected

    def test_finalize_status(self) -> None:
        good = Criterion.judge("a", 0.0, "le", 1.0)
        bad = Criterion.judge("b", 2.0, "le", 1.0)

        assert finalize_report("x", {}, {"a": 0.0}, [good]).status == "passed"
        assert finalize_report("x", {}, {"a": 0.0, "b": 2.0}, [good, bad]).status == "failed"
        assert finalize_report("x", {}, {"a": 0.0}, [good], partial=True).status == "partial"

    def test_report_round_trips_through_json(self) -> None:
        report = finalize_report(
            "metric_scaling",
            {"level": 1.0},
            {"min_value": 0.1},
            [Criterion.judge("min_value", 0.1, "ge", 0.0)],
            series={"eps": [1.0, 0.5]},
        )
        restored = ExperimentReport.model_validate_json(report.model_dump_json())

        assert restored == report
        assert restored.schema_version == SCHEMA_VERSION
        assert restored.recompute_passed()

    def test_skipped(self) -> None:
        report = skipped_report("zero_ray", {}, "verdict is NotCovered")
        assert report.status == "skipped"
        assert report.notes == ["verdict is NotCovered"]
        assert not report.passed
