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
Surgery equivalence: discounted solutions coincide under H and a modified H.

Two modified families are supported:

    surgery      clamp at alpha_bar; applicable when sup_y H(p, y) < alpha_bar,
                 so every level the solution reaches lies where the two
                 Hamiltonians have the same sub- and superlevel sets
    convexified  applicable when |p| >= R and inf_y H(p, y) >= alpha_bar with
                 alpha_bar = sup over B_R of max(H, H_convexified)
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from homogenization_lab.artifacts import ArtifactWriter
from homogenization_lab.config import settings
from homogenization_lab.env import realize
from homogenization_lab.errors import ConfigurationError, PreconditionViolation
from homogenization_lab.hamiltonian import Hamiltonian, as_gradient, convexified_alpha_bar, sublevel_equal_check
from homogenization_lab.jobs import run_jobs
from homogenization_lab.logging import get_logger
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.hamiltonian import HamiltonianSpec
from homogenization_lab.models.report import Criterion, ExperimentReport, finalize_report
from homogenization_lab.solver.discounted import minimum_viscosity, solve_discounted

logger = get_logger(__name__)


@dataclass(frozen=True)
class _PairJob:
    base: HamiltonianSpec
    modified: HamiltonianSpec
    seed: int
    p: tuple[float, ...]
    delta: float
    grid: Grid
    tol: float


def _pair_difference(job: _PairJob) -> float:
    env = realize(job.base.resolved_env_spec, job.seed)
    # both solves share sigma
    sigma = max(minimum_viscosity(job.base, job.p), minimum_viscosity(job.modified, job.p))
    v = solve_discounted(job.base, env, job.p, job.delta, job.grid, tol=job.tol, sigma=sigma)
    v_mod = solve_discounted(job.modified, env, job.p, job.delta, job.grid, tol=job.tol, sigma=sigma)
    return v.v.sup_distance(v_mod.v)


def equivalence_level(modified: HamiltonianSpec) -> float:
    """alpha_bar of the modified Hamiltonian."""
    if modified.family == "surgery":
        assert modified.alpha_bar is not None
        return modified.alpha_bar
    if modified.family == "convexified":
        return convexified_alpha_bar(modified)
    raise ConfigurationError(f"family '{modified.family}' is not a modified Hamiltonian")


def check_regime(modified: HamiltonianSpec, p: ArrayLike) -> None:
    """
    Raises:
        PreconditionViolation: If p lies outside the regime where the solutions coincide
    """
    assert modified.base is not None and modified.radius is not None
    base = Hamiltonian(modified.base)
    p_vec = as_gradient(p, base.dimension)
    alpha_bar = equivalence_level(modified)
    if modified.family == "surgery":
        top = base.upper_at(p_vec)
        if top >= alpha_bar:
            raise PreconditionViolation(
                f"p={p_vec.tolist()} reaches level {top:.6g} >= alpha_bar {alpha_bar:.6g}",
                witness={"p": p_vec.tolist(), "sup_h": top},
            )
        return
    norm = float(np.linalg.norm(p_vec))
    floor = base.lower_at(p_vec)
    if norm < modified.radius or floor < alpha_bar:
        raise PreconditionViolation(
            f"p={p_vec.tolist()} needs |p| >= {modified.radius:g} and inf_y H >= {alpha_bar:.6g} (got {floor:.6g})",
            witness={"p": p_vec.tolist(), "norm": norm, "inf_h": floor},
        )


def surgery_equivalence(
    modified: HamiltonianSpec,
    p_list: Sequence[ArrayLike],
    deltas: Sequence[float],
    seeds: Sequence[int],
    grid: Grid,
    tol: float = 1e-8,
    probes: int | None = None,
    workers: int | None = None,
    writer: ArtifactWriter | None = None,
) -> ExperimentReport:
    """
    Solve the discounted problem under the base and modified Hamiltonians.

    Metrics:
        max_diff: max node-wise |v - v_mod| on the trusted interior
        diff_growth: diff at the smallest delta minus diff at the largest
        sublevel_disagreements: probes where the level sets differ at the
            compared level

    Raises:
        ConfigurationError: On a non-modified spec or bad deltas
        PreconditionViolation: If some p lies outside the applicable regime
    """
    name = "surgery_equivalence"
    if modified.base is None:
        raise ConfigurationError("surgery_equivalence needs a surgery or convexified spec")
    if not deltas or any(d <= 0 for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ConfigurationError("deltas must be positive and strictly decreasing")
    base = modified.base
    points = [tuple(float(c) for c in as_gradient(p, modified.dimension)) for p in p_list]
    for p in points:
        check_regime(modified, p)
    used_seeds = [int(seeds[0])] if base.resolved_env_spec.is_deterministic else [int(s) for s in seeds]

    jobs = [
        _PairJob(base=base, modified=modified, seed=s, p=p, delta=float(d), grid=grid, tol=tol)
        for p in points
        for d in deltas
        for s in used_seeds
    ]
    diffs = np.asarray(run_jobs(_pair_difference, jobs, workers=workers, label=name))
    per_delta = np.max(diffs.reshape(len(points), len(deltas), len(used_seeds)), axis=(0, 2))

    ham = Hamiltonian(base)
    if modified.family == "surgery":
        compared = max(ham.upper_at(p) for p in points)
    else:
        compared = min(ham.lower_at(p) for p in points)
    level_check = sublevel_equal_check(base, modified, compared, probes=probes or settings.surgery_probes)

    metrics = {
        "max_diff": float(np.max(per_delta)),
        "diff_growth": float(per_delta[-1] - per_delta[0]),
        "sublevel_disagreements": float(level_check.disagreements),
        "alpha_bar": equivalence_level(modified),
    }
    criteria = [
        Criterion.judge("max_diff", metrics["max_diff"], "le", 2.0 * tol),
        Criterion.judge("diff_growth", metrics["diff_growth"], "le", 2.0 * tol),
        Criterion.judge("sublevel_disagreements", metrics["sublevel_disagreements"], "le", 0.0),
    ]
    inputs = {
        "modified": modified.model_dump(mode="json"),
        "p_list": [list(p) for p in points],
        "deltas": [float(d) for d in deltas],
        "seeds": used_seeds,
        "grid": grid.model_dump(mode="json"),
        "tol": tol,
        "compared_level": compared,
    }
    series = {"deltas": [float(d) for d in deltas], "max_diff": per_delta.tolist()}
    report = finalize_report(name, inputs, metrics, criteria, series=series)
    if writer is not None:
        report.artifacts.append(writer.series(f"{name}.csv", series))
    logger.info(name, status=report.status, **metrics)
    return report
