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
Effective Hamiltonian estimation.

Hbar(p) is estimated from -delta v^delta(0) over a sequence of discount factors
and seeds. The upper estimate extrapolates the cross-seed maximum linearly to
delta = 0 from the two smallest discount factors; the lower estimate does the
same with the cross-seed minimum. For deterministic environments the two
coincide; a persistent gap flags lattice points where the estimate carries no
verdict.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import RegularGridInterpolator

from homogenization_lab.env import realize
from homogenization_lab.errors import ConfigurationError, DomainRangeError, TableBuildError
from homogenization_lab.hamiltonian import Hamiltonian, as_gradient
from homogenization_lab.jobs import run_jobs
from homogenization_lab.logging import get_logger
from homogenization_lab.models.effective import (
    BallDiagnostic,
    DeterminismReport,
    EffectiveEstimate,
    PLattice,
    StationarityReport,
)
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.hamiltonian import HamiltonianSpec
from homogenization_lab.solver.discounted import DiscountedSolveResult, SolveMethod, solve_discounted

logger = get_logger(__name__)

MIN_RANDOM_SEEDS = 8
MIN_STATIONARITY_SEEDS = 30
DEFAULT_MAX_SPACING = 0.25


@dataclass(frozen=True)
class DiscountedJob:
    """One (p, delta, seed) discounted solve, shipped to a worker process."""

    hamiltonian: HamiltonianSpec
    seed: int
    p: tuple[float, ...]
    delta: float
    grid: Grid
    tol: float
    method: SolveMethod = "newton"


def run_discounted_job(job: DiscountedJob) -> float:
    """Solve one discounted problem and return -delta * v(0)."""
    env = realize(job.hamiltonian.resolved_env_spec, job.seed)
    result = solve_discounted(job.hamiltonian, env, job.p, job.delta, job.grid, tol=job.tol, method=job.method)
    return result.origin_estimate()


def _extrapolate(deltas: Sequence[float], values: NDArray[np.float64]) -> float:
    if len(deltas) == 1:
        return float(values[-1])
    d_a, d_b = deltas[-2], deltas[-1]
    slope = (values[-2] - values[-1]) / (d_a - d_b)
    return float(values[-1] - slope * d_b)


def reduce_estimate(
    p: Sequence[float], deltas: Sequence[float], seeds: Sequence[int], values: NDArray[np.float64]
) -> EffectiveEstimate:
    """
    Turn a [seed, delta] matrix of -delta v(0) into an EffectiveEstimate.
    """
    upper = _extrapolate(deltas, np.max(values, axis=0))
    lower = _extrapolate(deltas, np.min(values, axis=0))
    finest = values[:, -1]
    spread = float(np.std(finest, ddof=1)) if finest.size > 1 else 0.0
    return EffectiveEstimate(
        p=tuple(float(c) for c in p),
        delta_sequence=tuple(float(d) for d in deltas),
        seeds=tuple(int(s) for s in seeds),
        per_seed_values=tuple(tuple(float(x) for x in row) for row in values),
        hbar=upper,
        hbar_low=min(lower, upper),
        uncertainty=spread,
    )


def _check_inputs(ham: Hamiltonian, deltas: Sequence[float], seeds: Sequence[int], grid: Grid) -> list[int]:
    if not deltas:
        raise ConfigurationError("at least one discount factor is required")
    if any(d <= 0 for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ConfigurationError("discount factors must be positive and strictly decreasing")
    if not seeds:
        raise ConfigurationError("at least one seed is required")
    if grid.dimension != ham.dimension:
        raise ConfigurationError("grid and Hamiltonian dimensions differ")
    env_spec = ham.spec.resolved_env_spec
    if env_spec.is_deterministic:
        # every seed gives the same potential
        return [int(seeds[0])]
    if len(seeds) < MIN_RANDOM_SEEDS:
        raise ConfigurationError(
            f"random family '{env_spec.family}' needs at least {MIN_RANDOM_SEEDS} seeds, got {len(seeds)}"
        )
    return [int(s) for s in seeds]


def estimate_point(
    h: HamiltonianSpec,
    p: ArrayLike,
    deltas: Sequence[float],
    seeds: Sequence[int],
    grid: Grid,
    tol: float = 1e-8,
    method: SolveMethod = "newton",
    workers: int | None = None,
) -> EffectiveEstimate:
    """
    Estimate Hbar(p).

    Args:
        h: Hamiltonian spec
        p: Macroscopic gradient
        deltas: Strictly decreasing discount factors
        seeds: Realization seeds (at least 8 for random families)
        grid: Grid for every discounted solve
        tol: Discounted solver tolerance
        method: Discounted solver method
        workers: Job pool width

    Returns:
        EffectiveEstimate

    Raises:
        ConfigurationError: On invalid inputs
        SolverDivergenceError: If a discounted solve fails
    """
    ham = Hamiltonian(h)
    used_seeds = _check_inputs(ham, deltas, seeds, grid)
    p_tuple = tuple(float(c) for c in as_gradient(p, ham.dimension))
    jobs = [
        DiscountedJob(hamiltonian=h, seed=s, p=p_tuple, delta=float(d), grid=grid, tol=tol, method=method)
        for s in used_seeds
        for d in deltas
    ]
    values = np.asarray(run_jobs(run_discounted_job, jobs, workers=workers, label="estimate_point"))
    estimate = reduce_estimate(p_tuple, deltas, used_seeds, values.reshape(len(used_seeds), len(deltas)))
    logger.info("hbar_estimated", p=p_tuple, hbar=estimate.hbar, hbar_low=estimate.hbar_low, uncertainty=estimate.uncertainty)
    return estimate


@dataclass(frozen=True, eq=False)
class EffectiveTable:
    """
    Hbar sampled on a p-lattice, with multilinear interpolation.

    Attributes:
        axes: Lattice coordinates per axis
        hbar: Upper estimates, shape of the lattice
        hbar_low: Lower estimates
        uncertainty: Cross-seed standard deviations
        estimates: Per-node estimates in lattice order (empty for synthetic tables)
        warnings: Validation warnings
    """

    axes: tuple[NDArray[np.float64], ...]
    hbar: NDArray[np.float64]
    hbar_low: NDArray[np.float64]
    uncertainty: NDArray[np.float64]
    estimates: tuple[EffectiveEstimate, ...] = ()
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @classmethod
    def from_values(cls, axes: Sequence[ArrayLike], hbar: ArrayLike) -> "EffectiveTable":
        """Synthetic table with exact values (no uncertainty)."""
        axes_arr = tuple(np.asarray(a, dtype=np.float64) for a in axes)
        values = np.asarray(hbar, dtype=np.float64)
        if values.shape != tuple(a.size for a in axes_arr):
            raise ConfigurationError("table values do not match the lattice axes")
        return cls(axes=axes_arr, hbar=values, hbar_low=values.copy(), uncertainty=np.zeros_like(values))

    @classmethod
    def from_function(cls, lattice: PLattice, func: Any) -> "EffectiveTable":
        """Synthetic table sampling ``func(points)`` (points shape (N, d)) on a lattice."""
        axes = lattice.axes()
        values = np.asarray(func(lattice.points()), dtype=np.float64).reshape(tuple(a.size for a in axes))
        return cls.from_values(axes, values)

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def spacing(self) -> float:
        return float(max(np.max(np.diff(a)) for a in self.axes))

    @property
    def lower(self) -> NDArray[np.float64]:
        return np.array([a[0] for a in self.axes])

    @property
    def upper(self) -> NDArray[np.float64]:
        return np.array([a[-1] for a in self.axes])

    def points(self) -> NDArray[np.float64]:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def outside_distance(self, q: ArrayLike) -> NDArray[np.float64]:
        """Sup-norm distance of each gradient from the lattice box (0 inside)."""
        arr = np.asarray(q, dtype=np.float64)
        below = np.clip(self.lower - arr, 0.0, None)
        above = np.clip(arr - self.upper, 0.0, None)
        return np.max(np.maximum(below, above), axis=-1)

    def contains(self, q: ArrayLike, tol: float = 1e-12) -> bool:
        return bool(np.all(self.outside_distance(q) <= tol * max(1.0, float(np.max(np.abs(self.upper))))))

    def _interpolator(self, values: NDArray[np.float64]) -> RegularGridInterpolator:
        return RegularGridInterpolator(self.axes, values, method="linear", bounds_error=False, fill_value=None)

    def interpolate(self, q: ArrayLike, which: str = "hbar") -> NDArray[np.float64]:
        """
        Multilinear interpolation of the table at gradients ``q`` (trailing axis d).

        Raises:
            DomainRangeError: If a gradient lies outside the lattice box
        """
        arr = as_gradient(q, self.dimension)
        if not self.contains(arr):
            worst = arr.reshape(-1, self.dimension)[int(np.argmax(self.outside_distance(arr).ravel()))]
            raise DomainRangeError(f"gradient {worst.tolist()} lies outside the table window")
        values = self.hbar if which == "hbar" else self.hbar_low
        flat = np.clip(arr.reshape(-1, self.dimension), self.lower, self.upper)
        return self._interpolator(values)(flat).reshape(arr.shape[:-1])

    def lipschitz(self) -> float:
        """Lipschitz bound of the multilinear interpolant."""
        slopes = []
        for k, axis in enumerate(self.axes):
            if axis.size < 2:
                slopes.append(0.0)
                continue
            diffs = np.abs(np.diff(self.hbar, axis=k))
            steps = np.diff(axis).reshape([-1 if j == k else 1 for j in range(self.dimension)])
            slopes.append(float(np.max(diffs / steps)))
        return math.sqrt(sum(s * s for s in slopes))

    def minimum(self) -> float:
        return float(np.min(self.hbar))

    def argmin(self) -> NDArray[np.float64]:
        return self.points()[int(np.argmin(self.hbar.ravel()))]


def validate_table(table: EffectiveTable, ham: Hamiltonian) -> list[str]:
    """
    Check a built table against the a-priori Lipschitz bound and coercivity.

    Returns:
        Human-readable warnings (empty when everything is consistent)
    """
    warnings: list[str] = []
    reach = float(np.max(np.linalg.norm(table.points(), axis=-1)))
    top = ham.bound_above(reach)
    bound = ham.lipschitz_p(1.05 * max(ham.sublevel_radius(top), reach) + 0.05)
    slack = 2.0 * float(np.max(table.uncertainty, initial=0.0)) / table.spacing
    if table.lipschitz() > 1.1 * bound + slack + 1e-9:
        warnings.append(f"table Lipschitz constant {table.lipschitz():.4g} exceeds the a-priori bound {bound:.4g}")

    index = np.unravel_index(int(np.argmin(table.hbar)), table.hbar.shape)
    if table.hbar.size > 1 and any(i in (0, n - 1) for i, n in zip(index, table.hbar.shape)):
        warnings.append("table minimum sits on the lattice boundary; the window may be too small")

    median = float(np.median(table.uncertainty))
    noisy = np.flatnonzero(table.uncertainty.ravel() > 3.0 * median)
    points = table.points()
    for i in noisy:
        warnings.append(
            f"uncertainty {table.uncertainty.ravel()[i]:.3g} at p={points[i].tolist()} exceeds 3x the median {median:.3g}"
        )
    for message in warnings:
        logger.warning("table_validation", detail=message)
    return warnings


def build_table(
    h: HamiltonianSpec,
    lattice: PLattice,
    deltas: Sequence[float],
    seeds: Sequence[int],
    grid: Grid,
    tol: float = 1e-8,
    method: SolveMethod = "newton",
    max_spacing: float = DEFAULT_MAX_SPACING,
    workers: int | None = None,
) -> EffectiveTable:
    """
    Estimate Hbar on every lattice point.

    All (node, delta, seed) solves are scheduled on one job pool; the table is
    reduced node by node in lattice order.

    Raises:
        ConfigurationError: On invalid inputs (including spacing > max_spacing)
        TableBuildError: If any node fails; carries the completed nodes
    """
    ham = Hamiltonian(h)
    if lattice.dimension != ham.dimension:
        raise ConfigurationError("lattice and Hamiltonian dimensions differ")
    if lattice.spacing > max_spacing:
        raise ConfigurationError(f"lattice spacing {lattice.spacing} exceeds the maximum {max_spacing}")
    used_seeds = _check_inputs(ham, deltas, seeds, grid)
    points = lattice.points()
    jobs = [
        DiscountedJob(hamiltonian=h, seed=s, p=tuple(float(c) for c in pt), delta=float(d), grid=grid, tol=tol, method=method)
        for pt in points
        for s in used_seeds
        for d in deltas
    ]
    outcomes = run_jobs(run_discounted_job, jobs, workers=workers, return_exceptions=True, label="build_table")
    per_node = len(used_seeds) * len(deltas)

    estimates: list[EffectiveEstimate] = []
    failures: list[tuple[int, Exception]] = []
    for n, pt in enumerate(points):
        chunk = outcomes[n * per_node : (n + 1) * per_node]
        errors = [o for o in chunk if isinstance(o, Exception)]
        if errors:
            failures.append((n, errors[0]))
            continue
        values = np.asarray(chunk, dtype=np.float64).reshape(len(used_seeds), len(deltas))
        estimates.append(reduce_estimate(pt, deltas, used_seeds, values))

    if failures:
        index, error = failures[0]
        partial = [{"p": list(e.p), "hbar": e.hbar, "hbar_low": e.hbar_low} for e in estimates]
        raise TableBuildError(
            f"{len(failures)} lattice node(s) failed; first at p={points[index].tolist()}: {error}",
            partial=partial,
        ) from error

    shape = tuple(a.size for a in lattice.axes())
    table = EffectiveTable(
        axes=lattice.axes(),
        hbar=np.array([e.hbar for e in estimates]).reshape(shape),
        hbar_low=np.array([e.hbar_low for e in estimates]).reshape(shape),
        uncertainty=np.array([e.uncertainty for e in estimates]).reshape(shape),
        estimates=tuple(estimates),
    )
    warnings = validate_table(table, ham)
    logger.info("table_built", nodes=len(estimates), warnings=len(warnings))
    return EffectiveTable(
        axes=table.axes,
        hbar=table.hbar,
        hbar_low=table.hbar_low,
        uncertainty=table.uncertainty,
        estimates=table.estimates,
        warnings=tuple(warnings),
    )


def ball_sup_diagnostic(result: DiscountedSolveResult, radius: float) -> BallDiagnostic:
    """
    sup and inf of -delta v over the ball of radius R / delta.

    The ball is intersected with the trusted interior; ``clipped`` records
    whether that intersection cut it.
    """
    if radius <= 0:
        raise ConfigurationError("ball radius must be positive")
    grid = result.v.grid
    reach = radius / result.delta
    mask = (grid.norms() <= reach) & grid.trusted_mask()
    values = -result.delta * result.v.values[mask]
    return BallDiagnostic(
        radius=radius,
        delta=result.delta,
        sup=float(np.max(values)),
        inf=float(np.min(values)),
        clipped=reach > 0.5 * grid.half_width,
    )


@dataclass(frozen=True, eq=False)
class GapMap:
    """
    Lattice points where hbar - hbar_low exceeds the threshold.

    Points in the region carry the label ``no verdict``: the estimate cannot
    decide whether the discounted limit exists there.
    """

    axes: tuple[NDArray[np.float64], ...]
    gap: NDArray[np.float64]
    threshold: NDArray[np.float64]
    region: NDArray[np.bool_]
    inside_radius: bool | None = None
    label: str = "no verdict"

    def points(self) -> NDArray[np.float64]:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        return pts[self.region.ravel()]


def gap_map(table: EffectiveTable, threshold: float | None = None, radius: float | None = None) -> GapMap:
    """
    Locate lattice points with a persistent upper/lower gap.

    Args:
        table: Effective table
        threshold: Absolute threshold (default: 3 x per-node uncertainty)
        radius: When given, report whether the region lies inside B_radius

    Returns:
        GapMap
    """
    gap = table.hbar - table.hbar_low
    if threshold is None:
        limit = np.maximum(3.0 * table.uncertainty, 1e-9)
    else:
        limit = np.full(gap.shape, float(threshold))
    region = gap > limit
    inside: bool | None = None
    if radius is not None:
        norms = np.linalg.norm(table.points(), axis=-1).reshape(gap.shape)
        inside = bool(np.all(norms[region] < radius))
    logger.info("gap_map", flagged=int(np.count_nonzero(region)), inside_radius=inside)
    return GapMap(axes=table.axes, gap=gap, threshold=limit, region=region, inside_radius=inside)


@dataclass(frozen=True)
class _GradientJob:
    hamiltonian: HamiltonianSpec
    seed: int
    p: tuple[float, ...]
    delta: float
    grid: Grid
    tol: float


def _origin_gradient(job: _GradientJob) -> tuple[float, ...]:
    env = realize(job.hamiltonian.resolved_env_spec, job.seed)
    result = solve_discounted(job.hamiltonian, env, job.p, job.delta, job.grid, tol=job.tol)
    v = result.v.values
    origin = job.grid.origin_index
    out = []
    for k in range(job.grid.dimension):
        up, down = list(origin), list(origin)
        up[k] += 1
        down[k] -= 1
        out.append((v[tuple(up)] - v[tuple(down)]) / (2.0 * job.grid.spacing))
    return tuple(float(g) for g in out)


def stationarity_check(
    h: HamiltonianSpec,
    p: ArrayLike,
    delta: float,
    seeds: Sequence[int],
    grid: Grid,
    tol: float = 1e-8,
    workers: int | None = None,
) -> StationarityReport:
    """
    Test E[Dv^delta(0)] = 0 across seeds (passes when |mean| <= 3 stderr).

    Raises:
        ConfigurationError: With fewer than 30 seeds
    """
    if len(seeds) < MIN_STATIONARITY_SEEDS:
        raise ConfigurationError(f"stationarity check needs at least {MIN_STATIONARITY_SEEDS} seeds")
    ham = Hamiltonian(h)
    p_tuple = tuple(float(c) for c in as_gradient(p, ham.dimension))
    jobs = [_GradientJob(hamiltonian=h, seed=int(s), p=p_tuple, delta=delta, grid=grid, tol=tol) for s in seeds]
    grads = np.asarray(run_jobs(_origin_gradient, jobs, workers=workers, label="stationarity"))
    mean = grads.mean(axis=0)
    stderr = grads.std(axis=0, ddof=1) / math.sqrt(len(seeds))
    passed = bool(np.all(np.abs(mean) <= 3.0 * stderr))
    report = StationarityReport(
        p=p_tuple,
        delta=delta,
        seeds=len(seeds),
        mean=tuple(float(m) for m in mean),
        stderr=tuple(float(s) for s in stderr),
        passed=passed,
    )
    logger.info("stationarity_check", passed=passed, mean=report.mean, stderr=report.stderr)
    return report


def determinism_check(
    h: HamiltonianSpec,
    p: ArrayLike,
    delta_times_width: float,
    seeds: Sequence[int],
    grid: Grid,
    half_widths: Sequence[float],
    tol: float = 1e-8,
    workers: int | None = None,
) -> DeterminismReport:
    """
    Compare the cross-seed spread of -delta v^delta(0) on growing windows.

    Each window L gets delta = delta_times_width / L and a grid of the same
    spacing as ``grid``. The spread on the widest window must be smaller than
    on the narrowest one.

    Raises:
        ConfigurationError: On a deterministic family, fewer than 8 seeds or
            half-widths that are not strictly increasing
    """
    ham = Hamiltonian(h)
    if ham.spec.resolved_env_spec.is_deterministic:
        raise ConfigurationError("determinism check needs a random environment family")
    if len(seeds) < MIN_RANDOM_SEEDS:
        raise ConfigurationError(f"determinism check needs at least {MIN_RANDOM_SEEDS} seeds")
    if len(half_widths) < 2 or any(b <= a for a, b in zip(half_widths, half_widths[1:])):
        raise ConfigurationError("half-widths must be at least two and strictly increasing")
    if delta_times_width <= 0:
        raise ConfigurationError("delta * L must be positive")
    if grid.dimension != ham.dimension:
        raise ConfigurationError("grid and Hamiltonian dimensions differ")

    p_tuple = tuple(float(c) for c in as_gradient(p, ham.dimension))
    windows = [grid.with_half_width(float(width)) for width in half_widths]
    deltas = [delta_times_width / window.half_width for window in windows]
    jobs = [
        DiscountedJob(hamiltonian=h, seed=int(s), p=p_tuple, delta=delta, grid=window, tol=tol)
        for window, delta in zip(windows, deltas)
        for s in seeds
    ]
    values = np.asarray(run_jobs(run_discounted_job, jobs, workers=workers, label="determinism"))
    spreads = values.reshape(len(windows), len(seeds)).std(axis=1, ddof=1)
    if spreads[0] > 0:
        ratio = float(spreads[-1] / spreads[0])
    else:
        ratio = 0.0 if spreads[-1] == 0 else math.inf
    report = DeterminismReport(
        p=p_tuple,
        delta_times_width=delta_times_width,
        half_widths=tuple(window.half_width for window in windows),
        deltas=tuple(deltas),
        seeds=len(seeds),
        spreads=tuple(float(s) for s in spreads),
        ratio=ratio,
        passed=ratio < 1.0,
    )
    logger.info("determinism_check", passed=report.passed, spreads=report.spreads, ratio=ratio)
    return report
