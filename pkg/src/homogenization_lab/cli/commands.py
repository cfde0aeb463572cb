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
Subcommand implementations.

Each command reads its blocks of the run config, drives the library and writes
artifacts through the run context. Commands raise the library's exceptions;
``homogenization_lab.cli.main`` maps them to exit codes.
"""

import numpy as np

from homogenization_lab.artifacts import load_table_npz
from homogenization_lab.cli.context import RunContext
from homogenization_lab.effective import EffectiveTable, build_table, gap_map
from homogenization_lab.errors import ConfigurationError, DomainRangeError, TableBuildError
from homogenization_lab.experiments import (
    corrector_sublinearity,
    homogenization_run,
    metric_scaling,
    msubsolution_check,
    surgery_equivalence,
    zero_ray,
)
from homogenization_lab.experiments.metric import fits_node_cap
from homogenization_lab.geometry import classify, convex_hull, sublevel_set
from homogenization_lab.hamiltonian import as_gradient, make_convexified, make_surgery
from homogenization_lab.logging import get_logger
from homogenization_lab.models.hamiltonian import HamiltonianSpec
from homogenization_lab.models.report import Criterion, finalize_report, skipped_report
from homogenization_lab.models.run_config import RunConfig
from homogenization_lab.oracles import has_oracle, oracle_errors, oracle_table
from homogenization_lab.plotting import plot_sublevel_overlay, plot_table

logger = get_logger(__name__)

SYNTHETIC_TABLES = {
    "abs": lambda q: np.linalg.norm(q, axis=-1),
    "quartic": lambda q: (np.sum(q * q, axis=-1) - 1.0) ** 2,
}


def _build(config: RunConfig, ctx: RunContext) -> EffectiveTable:
    """build_table from the [effective] block; partial results are written on failure."""
    eff = config.effective
    try:
        return build_table(
            config.hamiltonian_spec(),
            config.lattice(),
            eff.deltas,
            config.seed_list(),
            config.make_grid(),
            tol=config.run.tol,
            method=eff.method,
            max_spacing=eff.max_spacing,
            workers=ctx.workers,
        )
    except TableBuildError as e:
        ctx.writer.json("partial_table.json", {"schema_version": "1", "nodes": e.partial, "error": str(e)})
        raise


def _resolve_table(config: RunConfig, ctx: RunContext, path: str | None) -> EffectiveTable:
    """Table from a file, the 1D oracle, or a fresh build, in that order."""
    if path is not None:
        return load_table_npz(path)
    spec = config.hamiltonian_spec()
    if has_oracle(spec):
        logger.info("using_oracle_table", family=spec.family)
        return oracle_table(spec, config.lattice())
    return _build(config, ctx)


def cmd_estimate_hbar(config: RunConfig, ctx: RunContext) -> None:
    """Build the effective table, its gap map and (in 1D with an oracle) an agreement report."""
    spec = config.hamiltonian_spec()
    table = _build(config, ctx)
    ctx.writer.table("effective_table", table)
    ctx.writer.gaps("gap_map.csv", gap_map(table, config.effective.gap_threshold))

    reference = None
    inputs = {"hamiltonian": spec.model_dump(mode="json"), "lattice": config.lattice().model_dump(mode="json")}
    if has_oracle(spec):
        axis = table.axes[0]
        errors = oracle_errors(spec, axis.tolist(), table.hbar.tolist())
        reference = oracle_table(spec, config.lattice()).hbar.tolist()
        worst = float(max(errors))
        report = finalize_report(
            "estimate_hbar",
            inputs,
            {"oracle_error": worst},
            [Criterion.judge("oracle_error", worst, "le", config.effective.oracle_tolerance)],
            series={"p": axis.tolist(), "error": errors},
        )
    else:
        report = finalize_report("estimate_hbar", inputs, {"hbar_min": table.minimum()}, [])
    report.notes.extend(table.warnings)
    plot_table(ctx.writer.path("effective_table.svg"), table, reference)
    report.artifacts.append(ctx.writer.record("effective_table.svg"))
    ctx.add_report(report)


def _classify_table(config: RunConfig, ctx: RunContext) -> EffectiveTable:
    block = config.classify
    if block.table is not None:
        return load_table_npz(block.table)
    if block.synthetic is not None:
        return EffectiveTable.from_function(config.lattice(), SYNTHETIC_TABLES[block.synthetic])
    return _resolve_table(config, ctx, None)


def cmd_classify(config: RunConfig, ctx: RunContext) -> None:
    """
    Classify probe points against a table.

    Raises:
        DomainRangeError: If a probe lies outside the table window
    """
    block = config.classify
    table = _classify_table(config, ctx)
    points = np.asarray(block.points, dtype=np.float64) if block.points is not None else table.points()
    if points.ndim != 2 or points.shape[1] != table.dimension:
        raise ConfigurationError(f"classify points must have {table.dimension} coordinates each")
    for point in points:
        if not table.contains(point):
            raise DomainRangeError(f"point {point.tolist()} lies outside the table window")

    items = [classify(table, point, block.tol) for point in points]
    ctx.writer.classifications("classifications.csv", items)
    counts = {v: float(sum(i.verdict == v for i in items)) for v in ("MinimalLevel", "ExtremalBoundary", "NotCovered")}
    report = finalize_report(
        "classify",
        {"points": points.tolist(), "tol": block.tol},
        counts,
        [],
    )
    for n, alpha in enumerate(block.overlay_levels):
        sub = sublevel_set(table, alpha)
        hull = convex_hull(sub)
        report.artifacts.append(ctx.writer.geometry(f"overlay_{n}.csv", sub, hull))
        near = [i for i in items if abs(i.level - alpha) <= i.tol]
        plot_sublevel_overlay(ctx.writer.path(f"overlay_{n}.svg"), sub, hull, near)
        report.artifacts.append(ctx.writer.record(f"overlay_{n}.svg"))
    ctx.add_report(report)


def cmd_metric(config: RunConfig, ctx: RunContext) -> None:
    """Metric scaling, zero-cost ray and mollified subsolution checks at one p."""
    block = config.metric
    spec = config.hamiltonian_spec()
    grid = config.make_grid()
    seeds = config.seed_list()
    p = as_gradient(block.p if block.p is not None else [0.0] * spec.dimension, spec.dimension)
    table = _resolve_table(config, ctx, block.table)
    in_window = table.contains(p)
    if block.level is not None:
        level = block.level
    elif in_window:
        level = float(table.interpolate(p))
    else:
        raise DomainRangeError(f"p={p.tolist()} lies outside the table window and no level was given")

    ctx.add_report(
        metric_scaling(spec, p, level, block.scales, seeds, grid, block.probes_per_axis, block.tol, ctx.workers, ctx.writer)
    )
    fitting = [e for e in block.scales if fits_node_cap(grid, e)]
    finest = fitting[-1] if fitting else block.scales[-1]
    if in_window:
        ray = zero_ray(
            spec,
            p,
            classify(table, p),
            level,
            block.t_list,
            seeds,
            grid,
            finest,
            tol=block.zero_ray_tol,
            solver_tol=block.tol,
            workers=ctx.workers,
            writer=ctx.writer,
        )
    else:
        ray = skipped_report("zero_ray", {"p": p.tolist()}, "p lies outside the table window; no verdict")
    ctx.add_report(ray)
    ctx.add_report(
        msubsolution_check(
            spec,
            p,
            level,
            table,
            grid,
            finest,
            seed=seeds[0],
            mollify_radius=block.mollify_radius,
            solver_tol=block.tol,
            writer=ctx.writer,
        )
    )
    if block.corrector_radii:
        ctx.add_report(
            corrector_sublinearity(
                spec,
                p,
                config.effective.deltas[-1],
                block.corrector_radii,
                seeds,
                grid,
                tol=config.run.tol,
                workers=ctx.workers,
                writer=ctx.writer,
            )
        )


def cmd_homogenize(config: RunConfig, ctx: RunContext) -> None:
    block = config.homogenize
    table = _resolve_table(config, ctx, block.table)
    report = homogenization_run(
        config.hamiltonian_spec(),
        table,
        block.initial,
        block.eps_list,
        block.horizon,
        config.seed_list(),
        config.make_grid(),
        cfl=block.cfl,
        threshold=block.threshold,
        workers=ctx.workers,
        writer=ctx.writer,
    )
    ctx.add_report(report)


def modified_spec(config: RunConfig) -> HamiltonianSpec:
    """
    Surgery or convexified spec from the [surgery] block.

    Raises:
        ConfigurationError: If a clamp surgery has no alpha_bar
        PreconditionViolation: If the clamp precondition fails on a probe
    """
    block = config.surgery
    base = config.hamiltonian_spec()
    if block.kind == "convexified":
        return make_convexified(base, block.radius)
    if block.alpha_bar is None:
        raise ConfigurationError("clamp surgery needs surgery.alpha_bar")
    return make_surgery(base, block.alpha_bar, block.radius, probes=block.probes, seed=config.run.master_seed)


def cmd_surgery_check(config: RunConfig, ctx: RunContext) -> None:
    block = config.surgery
    report = surgery_equivalence(
        modified_spec(config),
        block.p_list,
        block.deltas,
        config.seed_list(),
        config.make_grid(),
        tol=config.run.tol,
        probes=block.probes,
        workers=ctx.workers,
        writer=ctx.writer,
    )
    ctx.add_report(report)
