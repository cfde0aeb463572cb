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
Artifact files: CSV, npz and JSON.

Every artifact carries ``schema_version``. CSV files start with ``# key=value``
comment lines describing the data, followed by a header row; JSON is written
with sorted keys so identical runs produce identical bytes.
"""

import csv
import json
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from homogenization_lab.effective import EffectiveTable, GapMap
from homogenization_lab.errors import ConfigurationError
from homogenization_lab.geometry import Classification, ConvexHull, SublevelSet
from homogenization_lab.logging import get_logger
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.report import SCHEMA_VERSION
from homogenization_lab.solver.grid_fn import GridFn

logger = get_logger(__name__)


def _component_names(prefix: str, dimension: int) -> list[str]:
    return [prefix] if dimension == 1 else [f"{prefix}{k + 1}" for k in range(dimension)]


def _write_csv(path: Path, meta: dict[str, Any], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        for key, value in {"schema_version": SCHEMA_VERSION, **meta}.items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path: str | Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Read an artifact CSV into its metadata and rows."""
    meta: dict[str, str] = {}
    lines: list[str] = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# ") and not lines:
                key, _, value = line[2:].rstrip("\n").partition("=")
                meta[key] = value
            else:
                lines.append(line)
    return meta, list(csv.DictReader(lines))


def write_grid_fn_csv(path: Path, fn: GridFn) -> None:
    grid = fn.grid
    coords = grid.coordinates().reshape(-1, grid.dimension)
    values = fn.values.reshape(-1)
    meta = {
        "dimension": grid.dimension,
        "half_width": grid.half_width,
        "spacing": grid.spacing,
        "time": "" if fn.time is None else repr(float(fn.time)),
    }
    rows = ([*c, v] for c, v in zip(coords.tolist(), values.tolist()))
    _write_csv(path, meta, [*_component_names("x", grid.dimension), "value"], rows)


def write_table_csv(path: Path, table: EffectiveTable) -> None:
    points = table.points()
    rows = (
        [*pt, h, lo, u]
        for pt, h, lo, u in zip(
            points.tolist(),
            table.hbar.ravel().tolist(),
            table.hbar_low.ravel().tolist(),
            table.uncertainty.ravel().tolist(),
        )
    )
    meta = {"dimension": table.dimension, "spacing": table.spacing, "warnings": len(table.warnings)}
    _write_csv(path, meta, [*_component_names("p", table.dimension), "hbar", "hbar_low", "uncertainty"], rows)


def write_gap_csv(path: Path, gaps: GapMap) -> None:
    mesh = np.meshgrid(*gaps.axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    rows = (
        [*pt, g, t, gaps.label if flagged else ""]
        for pt, g, t, flagged in zip(
            points.tolist(), gaps.gap.ravel().tolist(), gaps.threshold.ravel().tolist(), gaps.region.ravel().tolist()
        )
    )
    _write_csv(path, {"dimension": len(gaps.axes)}, [*_component_names("p", len(gaps.axes)), "gap", "threshold", "label"], rows)


def write_classifications_csv(path: Path, items: Sequence[Classification]) -> None:
    dimension = len(items[0].p) if items else 1
    header = [
        *_component_names("p", dimension),
        "verdict",
        "level",
        *_component_names("normal", dimension),
        "sublevel_margin",
        "hull_margin",
    ]
    rows = []
    for item in items:
        normal = list(item.normal) if item.normal is not None else [""] * dimension
        rows.append(
            [
                *item.p,
                item.verdict,
                item.level,
                *normal,
                "" if item.sublevel_margin is None else item.sublevel_margin,
                "" if item.hull_margin is None else item.hull_margin,
            ]
        )
    _write_csv(path, {"dimension": dimension, "tol": items[0].tol if items else ""}, header, rows)


def write_geometry_csv(path: Path, sub: SublevelSet, hull: ConvexHull) -> None:
    """Contour polylines (or intervals) and hull vertices as one vertex list."""
    rows: list[list[Any]] = []
    if sub.dimension == 1:
        for n, (a, b) in enumerate(sub.intervals):
            rows.extend([["interval", n, a, ""], ["interval", n, b, ""]])
        for vertex in hull.vertices.reshape(-1).tolist():
            rows.append(["hull", 0, vertex, ""])
    else:
        for n, contour in enumerate(sub.contours):
            rows.extend(["contour", n, q1, q2] for q1, q2 in contour.tolist())
        rows.extend(["hull", 0, q1, q2] for q1, q2 in hull.vertices.tolist())
    _write_csv(path, {"alpha": repr(float(sub.alpha)), "flag": sub.flag}, ["kind", "index", "q1", "q2"], rows)


def write_series_csv(path: Path, columns: dict[str, Sequence[float]], meta: dict[str, Any] | None = None) -> None:
    """Columns of equal length, e.g. eps against e(eps)."""
    lengths = {len(v) for v in columns.values()}
    if len(lengths) > 1:
        raise ConfigurationError("series columns must have equal lengths")
    rows = zip(*columns.values())
    _write_csv(path, meta or {}, list(columns), rows)


def save_table_npz(path: Path, table: EffectiveTable) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    axes = {f"axis_{k}": a for k, a in enumerate(table.axes)}
    np.savez(
        path,
        schema_version=np.array(SCHEMA_VERSION),
        hbar=table.hbar,
        hbar_low=table.hbar_low,
        uncertainty=table.uncertainty,
        **axes,
    )


def load_table_npz(path: str | Path) -> EffectiveTable:
    """
    Load a table written by ``save_table_npz``.

    Raises:
        ConfigurationError: If the file is missing or not a table
    """
    source = Path(path)
    if not source.is_file():
        raise ConfigurationError(f"table file not found: {source}")
    with np.load(source) as data:
        keys = set(data.files)
        if not {"hbar", "hbar_low", "uncertainty", "axis_0"} <= keys:
            raise ConfigurationError(f"{source} is not an effective table")
        axes = tuple(np.asarray(data[f"axis_{k}"]) for k in range(sum(k.startswith("axis_") for k in keys)))
        return EffectiveTable(
            axes=axes,
            hbar=np.asarray(data["hbar"]),
            hbar_low=np.asarray(data["hbar_low"]),
            uncertainty=np.asarray(data["uncertainty"]),
        )


def save_grid_fn_npz(path: Path, fn: GridFn) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = fn.grid
    np.savez(
        path,
        schema_version=np.array(SCHEMA_VERSION),
        values=fn.values,
        geometry=np.array([grid.dimension, grid.half_width, grid.spacing]),
        time=np.array(np.nan if fn.time is None else fn.time),
    )


def load_grid_fn_npz(path: str | Path) -> GridFn:
    with np.load(Path(path)) as data:
        dimension, half_width, spacing = data["geometry"].tolist()
        time = float(data["time"])
        grid = Grid(dimension=int(dimension), half_width=half_width, spacing=spacing)
        return GridFn(grid=grid, values=np.asarray(data["values"]), time=None if np.isnan(time) else time)


def dump_json(payload: BaseModel | dict[str, Any]) -> str:
    data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_json(path: Path, payload: BaseModel | dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(payload), encoding="utf-8")


class ArtifactWriter:
    """
    Writes artifacts under one output directory and records their relative paths.
    """

    def __init__(self, out_dir: str | Path):
        self.root = Path(out_dir)
        self.written: list[str] = []

    def path(self, name: str) -> Path:
        return self.root / name

    def record(self, name: str) -> str:
        if name not in self.written:
            self.written.append(name)
        logger.info("artifact_written", path=str(self.root / name))
        return name

    def json(self, name: str, payload: BaseModel | dict[str, Any]) -> str:
        write_json(self.path(name), payload)
        return self.record(name)

    def table(self, stem: str, table: EffectiveTable) -> list[str]:
        write_table_csv(self.path(f"{stem}.csv"), table)
        save_table_npz(self.path(f"{stem}.npz"), table)
        return [self.record(f"{stem}.csv"), self.record(f"{stem}.npz")]

    def grid_fn(self, stem: str, fn: GridFn) -> list[str]:
        write_grid_fn_csv(self.path(f"{stem}.csv"), fn)
        save_grid_fn_npz(self.path(f"{stem}.npz"), fn)
        return [self.record(f"{stem}.csv"), self.record(f"{stem}.npz")]

    def gaps(self, name: str, gaps: GapMap) -> str:
        write_gap_csv(self.path(name), gaps)
        return self.record(name)

    def classifications(self, name: str, items: Sequence[Classification]) -> str:
        write_classifications_csv(self.path(name), items)
        return self.record(name)

    def geometry(self, name: str, sub: SublevelSet, hull: ConvexHull) -> str:
        write_geometry_csv(self.path(name), sub, hull)
        return self.record(name)

    def series(self, name: str, columns: dict[str, Sequence[float]], meta: dict[str, Any] | None = None) -> str:
        write_series_csv(self.path(name), columns, meta)
        return self.record(name)
