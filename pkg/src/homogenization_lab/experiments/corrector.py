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
Corrector growth: w(x) = v^delta(x) - v^delta(0) should grow sublinearly.

For each radius r the ratio |w(x)| / |x| is maximized over the nodes within
half a grid spacing of the sphere |x| = r. The check passes when the ratios do
not increase over the upper half of the radii and the last ratio has either
vanished or dropped below the first ratio of that half.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from homogenization_lab.artifacts import ArtifactWriter
from homogenization_lab.env import realize
from homogenization_lab.errors import ConfigurationError
from homogenization_lab.hamiltonian import as_gradient
from homogenization_lab.jobs import run_jobs
from homogenization_lab.logging import get_logger
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.hamiltonian import HamiltonianSpec
from homogenization_lab.models.report import Criterion, ExperimentReport, finalize_report
from homogenization_lab.plotting import plot_series
from homogenization_lab.solver.discounted import solve_discounted
from homogenization_lab.solver.grid_fn import GridFn

logger = get_logger(__name__)

Corrector = Callable[[Grid], GridFn]


@dataclass(frozen=True)
class _CorrectorJob:
    hamiltonian: HamiltonianSpec
    seed: int
    p: tuple[float, ...]
    delta: float
    grid: Grid
    tol: float


def _solve_corrector(job: _CorrectorJob) -> GridFn:
    env = realize(job.hamiltonian.resolved_env_spec, job.seed)
    result = solve_discounted(job.hamiltonian, env, job.p, job.delta, job.grid, tol=job.tol)
    return result.v.with_values(result.v.values - result.v.at_origin())


def growth_ratios(w: GridFn, radii: Sequence[float]) -> list[float]:
    """sup over the discrete sphere of radius r of |w(x)| / |x|, per radius."""
    grid = w.grid
    norms = grid.norms()
    out = []
    for r in radii:
        shell = np.abs(norms - r) <= 0.5 * grid.spacing + 1e-12
        out.append(float(np.max(np.abs(w.values[shell]) / norms[shell], initial=0.0)))
    return out


def corrector_sublinearity(
    h: HamiltonianSpec,
    p: Sequence[float] | float,
    delta: float,
    radii: Sequence[float],
    seeds: Sequence[int],
    grid: Grid,
    tol: float = 1e-8,
    atol: float = 1e-6,
    corrector: Corrector | None = None,
    workers: int | None = None,
    writer: ArtifactWriter | None = None,
) -> ExperimentReport:
    """
    Measure r -> sup_{|x|=r} |w^delta(x)| / r.

    Args:
        h: Hamiltonian spec
        p: Macroscopic gradient
        delta: Discount factor (small)
        radii: Increasing radii inside the trusted interior
        seeds: Realization seeds; ratios are maximized across seeds
        grid: Discounted solver grid
        tol: Discounted solver tolerance
        atol: Absolute tolerance on ratio comparisons
        corrector: Replaces the solver with a fixed field (used by negative controls)
        workers: Job pool width

    Raises:
        ConfigurationError: On unsorted radii or radii beyond L/2
    """
    name = "corrector_sublinearity"
    p_vec = as_gradient(p, h.dimension)
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0:
        raise ConfigurationError("radii must be positive, strictly increasing and at least two")
    if radii[-1] > 0.5 * grid.half_width * (1 + 1e-12):
        raise ConfigurationError(f"largest radius {radii[-1]} exceeds the trusted half-width {0.5 * grid.half_width}")

    if corrector is not None:
        fields = [corrector(grid)]
        used_seeds: list[int] = []
    else:
        used_seeds = [int(seeds[0])] if h.resolved_env_spec.is_deterministic else [int(s) for s in seeds]
        p_tuple = tuple(float(c) for c in p_vec)
        jobs = [_CorrectorJob(hamiltonian=h, seed=s, p=p_tuple, delta=delta, grid=grid, tol=tol) for s in used_seeds]
        fields = run_jobs(_solve_corrector, jobs, workers=workers, label=name)

    ratios = np.max(np.array([growth_ratios(w, radii) for w in fields]), axis=0)
    top = ratios[len(ratios) // 2 :] if len(ratios) > 2 else ratios
    increase = float(np.max(np.diff(top), initial=-np.inf)) if top.size > 1 else 0.0
    last, first_top = float(top[-1]), float(top[0])
    metrics = {
        "max_increase": increase,
        "decay_margin": min(last - atol, last - first_top + atol),
        "ratio_last": last,
    }
    criteria = [
        Criterion.judge("max_increase", increase, "le", atol),
        Criterion.judge("decay_margin", metrics["decay_margin"], "le", 0.0),
    ]
    inputs = {
        "hamiltonian": h.model_dump(mode="json"),
        "p": p_vec.tolist(),
        "delta": delta,
        "radii": list(radii),
        "seeds": used_seeds,
        "grid": grid.model_dump(mode="json"),
        "fixture": corrector is not None,
    }
    series = {"radii": [float(r) for r in radii], "ratios": ratios.tolist()}
    report = finalize_report(name, inputs, metrics, criteria, series=series)
    if writer is not None:
        report.artifacts.append(writer.series(f"{name}.csv", series))
        plot_series(writer.path(f"{name}.svg"), series["radii"], {"ratio": series["ratios"]}, "r", "sup |w| / r", log_x=True)
        report.artifacts.append(writer.record(f"{name}.svg"))
    logger.info(name, status=report.status, **metrics)
    return report
