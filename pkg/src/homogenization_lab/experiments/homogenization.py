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
Homogenization comparison: u^eps against the effective solution ubar.

e(eps) is the sup of |u^eps - ubar| over the trusted interior and the snapshot
times {T/4, T/2, T}; both solutions live on the same grid. Before solving, the
gradients of u0 are classified on the table lattice. When any of them is
NotCovered the run still proceeds but is labelled outside-theorem-scope.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from homogenization_lab.artifacts import ArtifactWriter
from homogenization_lab.effective import EffectiveTable
from homogenization_lab.env import realize
from homogenization_lab.errors import ConfigurationError
from homogenization_lab.geometry import classify
from homogenization_lab.jobs import run_jobs
from homogenization_lab.logging import get_logger
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.hamiltonian import HamiltonianSpec
from homogenization_lab.models.report import Criterion, ExperimentReport, finalize_report
from homogenization_lab.models.run_config import InitialDatum
from homogenization_lab.plotting import plot_series
from homogenization_lab.solver.cauchy import solve_cauchy, solve_effective_cauchy
from homogenization_lab.solver.grid_fn import GridFn

logger = get_logger(__name__)

OUTSIDE_SCOPE = "outside-theorem-scope"
SHIFT_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class _CauchyJob:
    hamiltonian: HamiltonianSpec
    seed: int
    eps: float
    u0: GridFn
    horizon: float
    cfl: float
    reference: tuple[GridFn, ...]


def _cauchy_error(job: _CauchyJob) -> float:
    env = realize(job.hamiltonian.resolved_env_spec, job.seed)
    times = [float(r.time) for r in job.reference if r.time is not None]
    solution = solve_cauchy(job.hamiltonian, env, job.eps, job.u0, job.horizon, cfl=job.cfl, times=times)
    return max(solution.at(ref.time).sup_distance(ref) for ref in job.reference if ref.time is not None)


def scope_probes(table: EffectiveTable, u0: InitialDatum) -> list[tuple[float, ...]]:
    """Lattice points within the gradient range of u0 (one lattice step of slack)."""
    points = table.points()
    reach = u0.gradient_radius() + table.spacing
    keep = np.linalg.norm(points, axis=-1) <= reach + 1e-12
    return [tuple(float(c) for c in pt) for pt in points[keep]]


def homogenization_run(
    h: HamiltonianSpec,
    table: EffectiveTable,
    u0: InitialDatum,
    eps_list: Sequence[float],
    horizon: float,
    seeds: Sequence[int],
    grid: Grid,
    cfl: float = 0.5,
    threshold: float = 0.1,
    workers: int | None = None,
    writer: ArtifactWriter | None = None,
) -> ExperimentReport:
    """
    Compute e(eps) for each eps and judge convergence.

    With V = 0 there is no oscillation and the criterion is max e <= threshold;
    otherwise e must decrease strictly along eps_list and e(min eps) <= threshold.
    A shift check (u0 + 1 gives u + 1 for both equations) runs at the largest eps.

    Raises:
        ConfigurationError: On bad eps lists or mismatched dimensions
        DomainRangeError: If gradients leave the table window
    """
    name = "homogenization_run"
    if not eps_list or any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigurationError("eps_list must be positive and strictly decreasing")
    if table.dimension != h.dimension or grid.dimension != h.dimension:
        raise ConfigurationError("table, grid and Hamiltonian dimensions differ")
    env_spec = h.resolved_env_spec
    used_seeds = [int(seeds[0])] if env_spec.is_deterministic else [int(s) for s in seeds]

    verdicts = [classify(table, q).verdict for q in scope_probes(table, u0)]
    uncovered = verdicts.count("NotCovered")
    scope = OUTSIDE_SCOPE if uncovered else None

    start = u0.evaluate(grid)
    times = [horizon / 4, horizon / 2, horizon]
    reference = solve_effective_cauchy(table, start, horizon, cfl=cfl, times=times)
    jobs = [
        _CauchyJob(
            hamiltonian=h,
            seed=s,
            eps=float(e),
            u0=start,
            horizon=horizon,
            cfl=cfl,
            reference=tuple(reference.snapshots),
        )
        for e in eps_list
        for s in used_seeds
    ]
    outcomes = np.asarray(run_jobs(_cauchy_error, jobs, workers=workers, label=name))
    errors = np.max(outcomes.reshape(len(eps_list), len(used_seeds)), axis=1)

    shifted = u0.shifted(1.0).evaluate(grid)
    env = realize(env_spec, used_seeds[0])
    base_run = solve_cauchy(h, env, eps_list[0], start, horizon, cfl=cfl, times=times)
    shift_run = solve_cauchy(h, env, eps_list[0], shifted, horizon, cfl=cfl, times=times)
    shift_ref = solve_effective_cauchy(table, shifted, horizon, cfl=cfl, times=times)
    shift_defect = max(
        float(np.max(np.abs(shift_run.final().values - base_run.final().values - 1.0))),
        float(np.max(np.abs(shift_ref.final().values - reference.final().values - 1.0))),
    )

    metrics = {
        "e_max": float(np.max(errors)),
        "e_min_eps": float(errors[-1]),
        "shift_defect": shift_defect,
        "uncovered_probes": float(uncovered),
    }
    criteria = [Criterion.judge("shift_defect", shift_defect, "le", SHIFT_TOLERANCE)]
    if env_spec.amplitude == 0:
        criteria.append(Criterion.judge("e_max", metrics["e_max"], "le", threshold))
    else:
        if len(errors) > 1:
            metrics["e_max_increase"] = float(np.max(np.diff(errors)))
            criteria.append(Criterion.judge("e_max_increase", metrics["e_max_increase"], "lt", 0.0))
        criteria.append(Criterion.judge("e_min_eps", metrics["e_min_eps"], "le", threshold))

    inputs = {
        "hamiltonian": h.model_dump(mode="json"),
        "initial": u0.model_dump(mode="json"),
        "eps_list": [float(e) for e in eps_list],
        "horizon": horizon,
        "cfl": cfl,
        "seeds": used_seeds,
        "grid": grid.model_dump(mode="json"),
    }
    notes = [f"{uncovered} gradient(s) of u0 classified NotCovered"] if uncovered else []
    series = {"eps": [float(e) for e in eps_list], "error": errors.tolist()}
    report = finalize_report(name, inputs, metrics, criteria, series=series, notes=notes, scope=scope)
    if writer is not None:
        report.artifacts.append(writer.series(f"{name}.csv", series))
        report.artifacts.extend(writer.grid_fn(f"{name}_ubar", reference.final()))
        plot_series(writer.path(f"{name}.svg"), series["eps"], {"e(eps)": series["error"]}, "eps", "sup |u_eps - ubar|", log_x=True)
        report.artifacts.append(writer.record(f"{name}.svg"))
    logger.info(name, status=report.status, scope=scope, **metrics)
    return report
