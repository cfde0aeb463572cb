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
Metric-problem experiments: scaling limit, zero-cost ray and the subsolution
property of the limit metric.

All three evaluate eps * m(x / eps, 0) at macroscopic points x: the metric is
solved on the microscopic grid widened to half-width L / eps (same spacing),
then sampled at x / eps. Scales whose widened grid exceeds
``settings.max_grid_nodes`` are skipped and the report is marked partial.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from homogenization_lab.artifacts import ArtifactWriter
from homogenization_lab.config import settings
from homogenization_lab.effective import EffectiveTable
from homogenization_lab.env import realize
from homogenization_lab.errors import ConfigurationError
from homogenization_lab.geometry import Classification, mollify_field
from homogenization_lab.hamiltonian import Hamiltonian, as_gradient
from homogenization_lab.jobs import run_jobs
from homogenization_lab.logging import get_logger
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.hamiltonian import BASE_FAMILIES, HamiltonianSpec
from homogenization_lab.models.report import Criterion, ExperimentReport, finalize_report, skipped_report
from homogenization_lab.plotting import plot_series
from homogenization_lab.solver.grid_fn import GridFn
from homogenization_lab.solver.metric import solve_metric
from homogenization_lab.solver.numerical_hamiltonian import stencil

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class MetricJob:
    """One rescaled metric solve, sampled at macroscopic points."""

    hamiltonian: HamiltonianSpec
    seed: int
    p: tuple[float, ...]
    level: float
    grid: Grid
    eps: float
    points: NDArray[np.float64]
    tol: float


@dataclass(frozen=True, eq=False)
class MetricSample:
    """eps * m(points / eps) with solver diagnostics."""

    values: NDArray[np.float64]
    obstacle_constant: float
    sweeps: int
    defect: float


def rescaled_grid(grid: Grid, eps: float) -> Grid:
    return grid.with_half_width(grid.half_width / eps)


def fits_node_cap(grid: Grid, eps: float) -> bool:
    nodes = (2 * math.ceil(grid.half_width / (eps * grid.spacing) - 1e-9) + 1) ** grid.dimension
    return nodes <= settings.max_grid_nodes


def run_metric_job(job: MetricJob) -> MetricSample:
    env = realize(job.hamiltonian.resolved_env_spec, job.seed)
    result = solve_metric(job.hamiltonian, env, job.p, job.level, None, rescaled_grid(job.grid, job.eps), tol=job.tol)
    pts = job.points / job.eps
    sampled = result.sample(pts[:, 0] if job.grid.dimension == 1 else pts)
    return MetricSample(
        values=job.eps * np.asarray(sampled, dtype=np.float64),
        obstacle_constant=result.obstacle_constant,
        sweeps=result.sweeps,
        defect=max(result.subsolution_defect, result.equation_defect),
    )


def probe_points(grid: Grid, per_axis: int) -> NDArray[np.float64]:
    """Probe lattice on [-L/2, L/2]^d, shape (N, d)."""
    axis = np.linspace(-0.5 * grid.half_width, 0.5 * grid.half_width, per_axis)
    mesh = np.meshgrid(*([axis] * grid.dimension), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _used_seeds(h: HamiltonianSpec, seeds: Sequence[int]) -> list[int]:
    if not seeds:
        raise ConfigurationError("at least one seed is required")
    if h.resolved_env_spec.is_deterministic:
        return [int(seeds[0])]
    return [int(s) for s in seeds]


def _flat_metric_oracle(h: HamiltonianSpec, p: NDArray[np.float64], level: float, points: NDArray[np.float64]) -> NDArray[np.float64] | None:
    """r(level)|x| - p.x for V = 0 base families; None when not applicable."""
    if h.family not in BASE_FAMILIES or h.resolved_env_spec.amplitude != 0:
        return None
    radius = Hamiltonian(h).sublevel_radius(level)
    return radius * np.linalg.norm(points, axis=-1) - points @ p


def _inputs(
    h: HamiltonianSpec, p: NDArray[np.float64], level: float, seeds: Sequence[int], grid: Grid
) -> dict[str, Any]:
    return {
        "hamiltonian": h.model_dump(mode="json"),
        "p": p.tolist(),
        "level": level,
        "seeds": list(seeds),
        "grid": grid.model_dump(mode="json"),
    }


def metric_scaling(
    h: HamiltonianSpec,
    p: ArrayLike,
    level: float,
    scales: Sequence[float],
    seeds: Sequence[int],
    grid: Grid,
    probes_per_axis: int = 9,
    tol: float = 1e-6,
    workers: int | None = None,
    writer: ArtifactWriter | None = None,
) -> ExperimentReport:
    """
    Compare eps * m(x / eps, 0) across scales and seeds on a probe lattice.

    Metrics:
        eps_spread: max |difference| between the two finest scales
        eps_spread_increase: largest growth of the consecutive-scale spread
        seed_spread: max cross-seed range at the finest scale
        min_value: min over probes at the finest scale (nonnegativity)
        oracle_error: max error against r|x| - p.x (V = 0 base families only)

    Raises:
        ConfigurationError: On bad scales or when no scale fits the node cap
    """
    name = "metric_scaling"
    p_vec = as_gradient(p, h.dimension)
    if not scales or any(e <= 0 for e in scales) or any(b >= a for a, b in zip(scales, scales[1:])):
        raise ConfigurationError("scales must be positive and strictly decreasing")
    used_seeds = _used_seeds(h, seeds)
    inputs = {**_inputs(h, p_vec, level, used_seeds, grid), "scales": list(scales)}

    kept = [e for e in scales if fits_node_cap(grid, e)]
    notes = [f"scale {e:g} skipped: widened grid exceeds {settings.max_grid_nodes} nodes" for e in scales if e not in kept]
    if not kept:
        raise ConfigurationError("no scale fits the node cap; lower the grid size or raise max_grid_nodes")

    points = probe_points(grid, probes_per_axis)
    p_tuple = tuple(float(c) for c in p_vec)
    jobs = [
        MetricJob(hamiltonian=h, seed=s, p=p_tuple, level=level, grid=grid, eps=float(e), points=points, tol=tol)
        for e in kept
        for s in used_seeds
    ]
    samples: list[MetricSample] = run_jobs(run_metric_job, jobs, workers=workers, label=name)
    fields = np.stack([s.values for s in samples]).reshape(len(kept), len(used_seeds), -1)
    c1 = max(s.obstacle_constant for s in samples)

    spreads = [float(np.max(np.abs(fields[k + 1] - fields[k]))) for k in range(len(kept) - 1)]
    finest = fields[-1]
    metrics = {
        "eps_spread": spreads[-1] if spreads else 0.0,
        "eps_spread_increase": max((b - a for a, b in zip(spreads, spreads[1:])), default=0.0),
        "seed_spread": float(np.max(np.max(finest, axis=0) - np.min(finest, axis=0))),
        "min_value": float(np.min(finest)),
        "obstacle_constant": c1,
    }
    floor = 2.0 * grid.spacing * c1
    criteria = [
        Criterion.judge("min_value", metrics["min_value"], "ge", -floor),
        Criterion.judge("eps_spread_increase", metrics["eps_spread_increase"], "le", floor),
    ]
    oracle = _flat_metric_oracle(h, p_vec, level, points)
    if oracle is not None:
        metrics["oracle_error"] = float(np.max(np.abs(finest - oracle)))
        criteria.append(Criterion.judge("oracle_error", metrics["oracle_error"], "le", 3.0 * grid.spacing * c1))

    series = {"scales": [float(e) for e in kept], "eps_spread": spreads}
    report = finalize_report(name, inputs, metrics, criteria, series=series, notes=notes, partial=bool(notes))
    if writer is not None:
        columns: dict[str, Sequence[float]] = {f"x{k + 1}": points[:, k].tolist() for k in range(grid.dimension)}
        for e, values in zip(kept, fields):
            columns[f"eps={e:g}"] = values[0].tolist()
        report.artifacts.append(writer.series(f"{name}.csv", columns, {"p": p_vec.tolist(), "level": level}))
        if grid.dimension == 1:
            plot_series(
                writer.path(f"{name}.svg"),
                points[:, 0].tolist(),
                {f"eps={e:g}": values[0].tolist() for e, values in zip(kept, fields)},
                xlabel="x",
                ylabel="eps m(x/eps, 0)",
            )
            report.artifacts.append(writer.record(f"{name}.svg"))
    logger.info(name, status=report.status, **metrics)
    return report


def zero_ray(
    h: HamiltonianSpec,
    p: ArrayLike,
    classification: Classification,
    level: float,
    t_list: Sequence[float],
    seeds: Sequence[int],
    grid: Grid,
    eps: float,
    tol: float = 0.05,
    solver_tol: float = 1e-6,
    workers: int | None = None,
    writer: ArtifactWriter | None = None,
) -> ExperimentReport:
    """
    Check the zero-cost ray: |eps * m(t nu / eps, 0)| <= tol * t along the hull normal.

    Skipped unless the verdict is ExtremalBoundary.
    """
    name = "zero_ray"
    p_vec = as_gradient(p, h.dimension)
    used_seeds = _used_seeds(h, seeds)
    reach = 0.5 * grid.half_width
    times = list(t_list) or [reach / 4, reach / 2, reach]
    inputs = {**_inputs(h, p_vec, level, used_seeds, grid), "eps": eps, "t_list": times, "verdict": classification.verdict}
    if classification.verdict != "ExtremalBoundary" or classification.normal is None:
        logger.info(name, status="skipped", verdict=classification.verdict)
        return skipped_report(name, inputs, f"verdict {classification.verdict}: no zero-cost ray is predicted")
    if any(t <= 0 or t > reach * (1 + 1e-12) for t in times):
        raise ConfigurationError(f"ray times must lie in (0, {reach:g}]")
    if not fits_node_cap(grid, eps):
        raise ConfigurationError(f"scale {eps:g} exceeds the node cap of {settings.max_grid_nodes}")

    normal = np.asarray(classification.normal, dtype=np.float64)
    points = np.asarray(times)[:, None] * normal[None, :]
    jobs = [
        MetricJob(
            hamiltonian=h,
            seed=s,
            p=tuple(float(c) for c in p_vec),
            level=level,
            grid=grid,
            eps=eps,
            points=points,
            tol=solver_tol,
        )
        for s in used_seeds
    ]
    samples: list[MetricSample] = run_jobs(run_metric_job, jobs, workers=workers, label=name)
    costs = np.max(np.abs(np.stack([s.values for s in samples])), axis=0)
    ratios = costs / np.asarray(times)
    metrics = {"ray_cost_ratio": float(np.max(ratios))}
    criteria = [Criterion.judge("ray_cost_ratio", metrics["ray_cost_ratio"], "le", tol)]
    report = finalize_report(
        name,
        inputs,
        metrics,
        criteria,
        series={"t": [float(t) for t in times], "cost": costs.tolist()},
    )
    if writer is not None:
        report.artifacts.append(writer.series(f"{name}.csv", {"t": times, "cost": costs.tolist()}, {"normal": normal.tolist()}))
    logger.info(name, status=report.status, **metrics)
    return report


def msubsolution_check(
    h: HamiltonianSpec,
    p: ArrayLike,
    level: float,
    table: EffectiveTable,
    grid: Grid,
    eps: float,
    seed: int = 0,
    macro_nodes: int = 40,
    mollify_radius: float | None = None,
    tol: float = 0.1,
    solver_tol: float = 1e-6,
    writer: ArtifactWriter | None = None,
) -> ExperimentReport:
    """
    Check Hbar(p + D mbar) <= level for the mollified rescaled metric.

    The field eps * m(x / eps, 0) is sampled on a macroscopic grid over
    [-L/2, L/2]^d, mollified, differentiated centrally and fed to the table.
    Skipped when p lies outside the table window.
    """
    name = "msubsolution_check"
    p_vec = as_gradient(p, h.dimension)
    inputs = {**_inputs(h, p_vec, level, [seed], grid), "eps": eps, "macro_nodes": macro_nodes}
    if not table.contains(p_vec):
        return skipped_report(name, inputs, "p lies outside the effective table window")
    if not fits_node_cap(grid, eps):
        raise ConfigurationError(f"scale {eps:g} exceeds the node cap of {settings.max_grid_nodes}")

    macro = Grid(dimension=grid.dimension, half_width=0.5 * grid.half_width, spacing=0.5 * grid.half_width / macro_nodes)
    radius = mollify_radius if mollify_radius is not None else 3.0 * macro.spacing
    coords = macro.coordinates().reshape(-1, grid.dimension)
    sample = run_metric_job(
        MetricJob(
            hamiltonian=h,
            seed=seed,
            p=tuple(float(c) for c in p_vec),
            level=level,
            grid=grid,
            eps=eps,
            points=coords,
            tol=solver_tol,
        )
    )
    field = GridFn(grid=macro, values=sample.values.reshape(macro.shape))
    smooth = mollify_field(field.values, macro.spacing, radius)
    margin = int(math.ceil(radius / macro.spacing)) + 1
    mask = macro.interior_mask(margin)
    gradients = (p_vec + stencil(smooth).central(macro.spacing))[mask]
    outside = table.outside_distance(gradients) > 0
    clipped = np.clip(gradients, table.lower, table.upper)
    defects = table.interpolate(clipped) - level

    metrics = {
        "max_defect": float(np.max(defects, initial=-math.inf)),
        "outside_window": float(np.count_nonzero(outside)),
        "checked_nodes": float(gradients.shape[0]),
    }
    criteria = [
        Criterion.judge("max_defect", metrics["max_defect"], "le", tol),
        Criterion.judge("outside_window", metrics["outside_window"], "le", 0.0),
    ]
    report = finalize_report(name, {**inputs, "mollify_radius": radius}, metrics, criteria)
    if writer is not None:
        report.artifacts.extend(writer.grid_fn(f"{name}_field", field.with_values(smooth)))
    logger.info(name, status=report.status, **metrics)
    return report
