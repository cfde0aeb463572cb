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
Geometry of effective sublevel sets.

Sublevel sets {Hbar <= alpha} are extracted from a table by linear
interpolation along lattice edges: maximal intervals in 1D, oriented marching
squares contours in 2D (sublevel side on the left). Convex hulls use the
monotone chain on lattice-scaled integer coordinates so orientation tests are
exact.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, Field
from scipy import ndimage

from homogenization_lab.effective import EffectiveTable
from homogenization_lab.errors import ConfigurationError, PreconditionViolation
from homogenization_lab.hamiltonian import as_gradient
from homogenization_lab.logging import get_logger
from homogenization_lab.solver.grid_fn import GridFn
from homogenization_lab.solver.numerical_hamiltonian import stencil

logger = get_logger(__name__)

SublevelFlag = Literal["ok", "empty", "full"]
Verdict = Literal["ExtremalBoundary", "NotCovered", "MinimalLevel"]

# Hull coordinates are rounded to this fraction of the lattice spacing.
_QUANTUM_FRACTION = 1e-6

# (corner a, corner b) per cell edge; corners 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1)
_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))
_CORNER_EDGES = {0: (0, 3), 1: (0, 1), 2: (1, 2), 3: (2, 3)}
_CORNER_OFFSETS = ((0, 0), (1, 0), (1, 1), (0, 1))


@dataclass(frozen=True, eq=False)
class SublevelSet:
    """
    {q : Hbar(q) <= alpha} on a table window.

    Attributes:
        alpha: Level
        table: Source table
        flag: ``empty`` / ``full`` when no / every lattice node lies in the set
        intervals: Maximal intervals (1D)
        contours: Oriented polylines, sublevel side on the left (2D)
        closed: Whether each contour closes on itself (2D)
        hull_points: Points whose convex hull is the hull of the set
    """

    alpha: float
    table: EffectiveTable
    flag: SublevelFlag
    intervals: tuple[tuple[float, float], ...] = ()
    contours: tuple[NDArray[np.float64], ...] = ()
    closed: tuple[bool, ...] = ()
    hull_points: NDArray[np.float64] = field(default_factory=lambda: np.zeros((0, 2)))

    @property
    def dimension(self) -> int:
        return self.table.dimension

    def contains(self, q: ArrayLike, tol: float = 0.0) -> NDArray[np.bool_]:
        return self.table.interpolate(q) <= self.alpha + tol

    def boundary_distance(self, q: ArrayLike) -> float:
        """Distance from a point to the set boundary (interval ends or contours)."""
        point = as_gradient(q, self.dimension)
        if self.dimension == 1:
            ends = [e for interval in self.intervals for e in interval]
            if not ends:
                return math.inf
            return float(min(abs(point[0] - e) for e in ends))
        best = math.inf
        for contour in self.contours:
            if contour.shape[0] == 1:
                best = min(best, float(np.linalg.norm(point - contour[0])))
                continue
            best = min(best, float(np.min(_segment_distances(point, contour[:-1], contour[1:]))))
        return best


def _segment_distances(point: NDArray[np.float64], starts: NDArray[np.float64], ends: NDArray[np.float64]) -> NDArray[np.float64]:
    seg = ends - starts
    length2 = np.sum(seg * seg, axis=-1)
    safe = np.where(length2 > 0, length2, 1.0)
    t = np.clip(np.sum((point - starts) * seg, axis=-1) / safe, 0.0, 1.0)
    closest = starts + t[:, None] * seg
    return np.linalg.norm(point - closest, axis=-1)


def _crossing(x0: float, x1: float, f0: float, f1: float, alpha: float) -> float:
    if f1 == f0:
        return x0
    return x0 + (alpha - f0) / (f1 - f0) * (x1 - x0)


def _intervals_1d(axis: NDArray[np.float64], values: NDArray[np.float64], alpha: float) -> list[tuple[float, float]]:
    inside = values <= alpha
    out: list[tuple[float, float]] = []
    n = axis.size
    i = 0
    while i < n:
        if not inside[i]:
            i += 1
            continue
        start = i
        while i + 1 < n and inside[i + 1]:
            i += 1
        end = i
        left = axis[0] if start == 0 else _crossing(axis[start - 1], axis[start], values[start - 1], values[start], alpha)
        right = axis[-1] if end == n - 1 else _crossing(axis[end], axis[end + 1], values[end], values[end + 1], alpha)
        out.append((float(left), float(right)))
        i += 1
    return out


def _bilinear(corners: Sequence[float], s: float, t: float) -> float:
    f00, f10, f11, f01 = corners
    return (1 - s) * (1 - t) * f00 + s * (1 - t) * f10 + s * t * f11 + (1 - s) * t * f01


def _cell_segments(
    x: NDArray[np.float64], y: NDArray[np.float64], f: NDArray[np.float64], alpha: float
) -> list[tuple[NDArray[np.float64], NDArray[np.float64]]]:
    segments: list[tuple[NDArray[np.float64], NDArray[np.float64]]] = []
    inside = f <= alpha
    n1, n2 = f.shape
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            ids = [(i + di, j + dj) for di, dj in _CORNER_OFFSETS]
            flags = [bool(inside[c]) for c in ids]
            if all(flags) or not any(flags):
                continue
            vals = [float(f[c]) for c in ids]
            pts = [np.array([x[c[0]], y[c[1]]]) for c in ids]
            crossings: dict[int, NDArray[np.float64]] = {}
            for e, (a, b) in enumerate(_EDGES):
                if flags[a] != flags[b]:
                    t = (alpha - vals[a]) / (vals[b] - vals[a])
                    crossings[e] = pts[a] + t * (pts[b] - pts[a])
            if len(crossings) == 2:
                e1, e2 = crossings
                pairs = [(e1, e2)]
            else:
                centre_inside = float(np.mean(vals)) <= alpha
                cut = [c for c in range(4) if flags[c] != centre_inside]
                pairs = [_CORNER_EDGES[c] for c in cut]
            for e1, e2 in pairs:
                a_pt, b_pt = crossings[e1], crossings[e2]
                if np.allclose(a_pt, b_pt, rtol=0.0, atol=1e-14):
                    continue
                # orient so the sublevel side is on the left
                direction = b_pt - a_pt
                normal = np.array([-direction[1], direction[0]]) / np.linalg.norm(direction)
                probe = 0.5 * (a_pt + b_pt) + 1e-4 * (x[i + 1] - x[i]) * normal
                s = (probe[0] - x[i]) / (x[i + 1] - x[i])
                t = (probe[1] - y[j]) / (y[j + 1] - y[j])
                if _bilinear(vals, min(max(s, 0.0), 1.0), min(max(t, 0.0), 1.0)) > alpha:
                    a_pt, b_pt = b_pt, a_pt
                segments.append((a_pt, b_pt))
    return segments


def _join_segments(
    segments: list[tuple[NDArray[np.float64], NDArray[np.float64]]], quantum: float
) -> tuple[list[NDArray[np.float64]], list[bool]]:
    def key(point: NDArray[np.float64]) -> tuple[int, int]:
        return (int(round(point[0] / quantum)), int(round(point[1] / quantum)))

    by_start: dict[tuple[int, int], list[int]] = {}
    ends: set[tuple[int, int]] = set()
    for idx, (a, b) in enumerate(segments):
        by_start.setdefault(key(a), []).append(idx)
        ends.add(key(b))
    used = [False] * len(segments)
    heads = [i for i, (a, _) in enumerate(segments) if key(a) not in ends]
    head_set = set(heads)
    order = heads + [i for i in range(len(segments)) if i not in head_set]

    contours: list[NDArray[np.float64]] = []
    closed: list[bool] = []
    for first in order:
        if used[first]:
            continue
        used[first] = True
        chain = [segments[first][0], segments[first][1]]
        start_key = key(segments[first][0])
        is_closed = False
        while True:
            tail = key(chain[-1])
            if tail == start_key and len(chain) > 2:
                is_closed = True
                break
            nxt = next((s for s in by_start.get(tail, []) if not used[s]), None)
            if nxt is None:
                break
            used[nxt] = True
            chain.append(segments[nxt][1])
        contours.append(np.array(chain))
        closed.append(is_closed)
    return contours, closed


def sublevel_set(table: EffectiveTable, alpha: float) -> SublevelSet:
    """
    Extract {Hbar <= alpha} from a table.

    Returns:
        SublevelSet with flag ``empty`` or ``full`` in the degenerate cases
    """
    values = table.hbar
    inside = values <= alpha
    flag: SublevelFlag = "ok"
    if not np.any(inside):
        flag = "empty"
    elif np.all(inside):
        flag = "full"

    if table.dimension == 1:
        axis = table.axes[0]
        intervals = _intervals_1d(axis, values, alpha) if flag != "empty" else []
        ends = np.array([e for iv in intervals for e in iv]).reshape(-1, 1)
        return SublevelSet(alpha=alpha, table=table, flag=flag, intervals=tuple(intervals), hull_points=ends)

    x, y = table.axes
    quantum = _QUANTUM_FRACTION * table.spacing
    segments = _cell_segments(x, y, values, alpha) if flag == "ok" else []
    contours, closed = _join_segments(segments, quantum)
    border = np.zeros_like(inside)
    border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    mesh = np.stack(np.meshgrid(x, y, indexing="ij"), axis=-1)
    points = [c for c in contours] + [mesh[inside & border]]
    hull_points = np.concatenate(points, axis=0) if points else np.zeros((0, 2))
    logger.debug("sublevel_set", alpha=alpha, flag=flag, contours=len(contours))
    return SublevelSet(
        alpha=alpha,
        table=table,
        flag=flag,
        contours=tuple(contours),
        closed=tuple(closed),
        hull_points=hull_points,
    )


@dataclass(frozen=True, eq=False)
class ConvexHull:
    """
    Convex hull of a sublevel set.

    Attributes:
        vertices: (k, d) vertices; counter-clockwise in 2D, [a, b] in 1D
        quantum: Coordinate resolution of the vertices
    """

    vertices: NDArray[np.float64]
    quantum: float

    @property
    def dimension(self) -> int:
        return int(self.vertices.shape[1]) if self.vertices.ndim == 2 else 1

    def _edges(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        starts = self.vertices
        ends = np.roll(self.vertices, -1, axis=0)
        return starts, ends

    def outward_normals(self) -> NDArray[np.float64]:
        starts, ends = self._edges()
        seg = ends - starts
        normals = np.stack([seg[:, 1], -seg[:, 0]], axis=-1)
        return normals / np.linalg.norm(normals, axis=-1, keepdims=True)

    def excess(self, points: ArrayLike) -> NDArray[np.float64]:
        """Signed amount by which points leave the hull (<= 0 inside)."""
        pts = np.asarray(points, dtype=np.float64)
        if self.dimension == 1:
            a, b = float(self.vertices[0, 0]), float(self.vertices[-1, 0])
            coords = pts[..., 0]
            return np.maximum(a - coords, coords - b)
        if self.vertices.shape[0] < 3:
            # degenerate hull: a point or a segment
            flat = pts.reshape(-1, 2)
            a, b = self.vertices[0], self.vertices[-1]
            dist = np.array([float(_segment_distances(q, a[None, :], b[None, :])[0]) for q in flat])
            return dist.reshape(pts.shape[:-1])
        normals = self.outward_normals()
        offsets = pts[..., None, :] - self.vertices
        return np.max(np.sum(offsets * normals, axis=-1), axis=-1)

    def contains(self, q: ArrayLike, tol: float = 0.0) -> bool:
        return bool(np.all(self.excess(as_gradient(q, self.dimension)) <= tol))

    def boundary_distance(self, q: ArrayLike) -> float:
        point = as_gradient(q, self.dimension)
        if self.dimension == 1:
            return float(min(abs(point[0] - self.vertices[0, 0]), abs(point[0] - self.vertices[-1, 0])))
        starts, ends = self._edges()
        return float(np.min(_segment_distances(point, starts, ends)))

    def nearest_normal(self, q: ArrayLike) -> NDArray[np.float64]:
        """
        Outward unit normal at the boundary point nearest to ``q``.

        At a vertex the normals of the two adjacent edges are averaged.
        """
        point = as_gradient(q, self.dimension)
        if self.dimension == 1:
            a, b = self.vertices[0, 0], self.vertices[-1, 0]
            return np.array([1.0 if abs(point[0] - b) <= abs(point[0] - a) else -1.0])
        starts, ends = self._edges()
        dists = _segment_distances(point, starts, ends)
        k = int(np.argmin(dists))
        normals = self.outward_normals()
        seg = ends[k] - starts[k]
        t = float(np.dot(point - starts[k], seg) / np.dot(seg, seg))
        if t <= 1e-9:
            averaged = normals[k] + normals[k - 1]
        elif t >= 1 - 1e-9:
            averaged = normals[k] + normals[(k + 1) % len(normals)]
        else:
            return normals[k]
        return averaged / np.linalg.norm(averaged)


def _monotone_chain(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o: tuple[int, int], a: tuple[int, int], b: tuple[int, int]) -> int:
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[int, int]] = []
    for pt in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], pt) <= 0:
            lower.pop()
        lower.append(pt)
    upper: list[tuple[int, int]] = []
    for pt in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], pt) <= 0:
            upper.pop()
        upper.append(pt)
    return lower[:-1] + upper[:-1]


def convex_hull(source: "SublevelSet | ConvexHull | ArrayLike", quantum: float | None = None) -> ConvexHull:
    """
    Convex hull of a sublevel set, of a hull, or of a point cloud.

    Args:
        source: SublevelSet, ConvexHull, or (N, d) points
        quantum: Coordinate resolution (defaults to 1e-6 x lattice spacing, or 1e-9)

    Returns:
        ConvexHull with counter-clockwise vertices in 2D

    Raises:
        ConfigurationError: If there are no points
    """
    if isinstance(source, SublevelSet):
        points = np.asarray(source.hull_points, dtype=np.float64)
        res = quantum or _QUANTUM_FRACTION * source.table.spacing
    elif isinstance(source, ConvexHull):
        points = source.vertices
        res = quantum or source.quantum
    else:
        points = np.asarray(source, dtype=np.float64)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        res = quantum or 1e-9
    if points.size == 0:
        raise ConfigurationError("cannot take the convex hull of an empty set")

    if points.shape[1] == 1:
        lo = round(float(np.min(points)) / res) * res
        hi = round(float(np.max(points)) / res) * res
        return ConvexHull(vertices=np.array([[lo], [hi]]), quantum=res)

    scaled = [(int(round(px / res)), int(round(py / res))) for px, py in points]
    hull = _monotone_chain(scaled)
    vertices = np.array(hull, dtype=np.float64) * res
    return ConvexHull(vertices=vertices.reshape(-1, 2), quantum=res)


class Classification(BaseModel):
    """
    Geometric verdict for a macroscopic gradient.

    Attributes:
        p: Gradient classified
        verdict: ExtremalBoundary, NotCovered or MinimalLevel
        level: Hbar(p)
        normal: Outward normal of the hull at p (ExtremalBoundary only)
        sublevel_margin: Distance from p to the sublevel boundary
        hull_margin: Distance from p to the hull boundary
        tol: Tolerance used
    """

    p: tuple[float, ...] = Field(..., description="Gradient classified")
    verdict: Verdict = Field(..., description="Geometric verdict")
    level: float = Field(..., description="Hbar(p)")
    normal: tuple[float, ...] | None = Field(default=None, description="Outward hull normal")
    sublevel_margin: float | None = Field(default=None, description="Distance to the sublevel boundary")
    hull_margin: float | None = Field(default=None, description="Distance to the hull boundary")
    tol: float = Field(..., description="Tolerance")


def classify(table: EffectiveTable, p: ArrayLike, tol: float | None = None) -> Classification:
    """
    Classify p by the geometry of the sublevel set through it.

    Raises:
        DomainRangeError: If p lies outside the table window
    """
    point = as_gradient(p, table.dimension)
    level = float(table.interpolate(point))
    used_tol = table.spacing if tol is None else tol
    p_tuple = tuple(float(c) for c in point)
    if level <= table.minimum() + used_tol:
        return Classification(p=p_tuple, verdict="MinimalLevel", level=level, tol=used_tol)

    sub = sublevel_set(table, level)
    hull = convex_hull(sub)
    sub_margin = sub.boundary_distance(point)
    hull_margin = hull.boundary_distance(point)
    if sub_margin <= used_tol and hull_margin <= used_tol:
        normal = tuple(float(c) for c in hull.nearest_normal(point))
        verdict: Verdict = "ExtremalBoundary"
    else:
        normal = None
        verdict = "NotCovered"
    logger.debug("classified", p=p_tuple, verdict=verdict, hbar=level)
    return Classification(
        p=p_tuple,
        verdict=verdict,
        level=level,
        normal=normal,
        sublevel_margin=sub_margin,
        hull_margin=hull_margin,
        tol=used_tol,
    )


def mollify_field(values: NDArray[np.float64], spacing: float, radius: float) -> NDArray[np.float64]:
    """
    Convolve node values with a normalized biweight kernel of the given radius.

    Raises:
        ConfigurationError: If radius < 2 * spacing
    """
    if radius < 2.0 * spacing - 1e-12:
        raise ConfigurationError(f"mollification radius {radius} must be at least 2h = {2.0 * spacing}")
    reach = int(math.floor(radius / spacing + 1e-9))
    offsets = np.arange(-reach, reach + 1) * spacing
    mesh = np.meshgrid(*([offsets] * values.ndim), indexing="ij")
    dist2 = sum(m * m for m in mesh) / radius**2
    kernel = np.clip(1.0 - dist2, 0.0, None) ** 2
    kernel /= kernel.sum()
    return ndimage.convolve(values, kernel, mode="nearest")


class MollifyCheck(BaseModel):
    """Outcome of the mollified-subsolution hull check."""

    passed: bool = Field(..., description="Every mollified gradient lies in the hull (within tol)")
    worst_excess: float = Field(..., description="Largest signed distance outside the hull")
    worst_point: tuple[float, ...] | None = Field(default=None, description="Node attaining the worst excess")
    checked_nodes: int = Field(..., description="Interior nodes checked")
    precondition_defect: float = Field(..., description="max(Hbar(p + Dz) - alpha) before mollifying")
    tol: float = Field(..., description="Tolerance")


def mollify_and_check(
    z: GridFn,
    table: EffectiveTable,
    alpha: float,
    mollify_radius: float,
    p: ArrayLike | None = None,
    tol: float | None = None,
    precondition_tol: float | None = None,
) -> MollifyCheck:
    """
    Check that a mollified subsolution has gradients in the hull of {Hbar <= alpha}.

    Args:
        z: Discrete subsolution of Hbar(p + Dz) <= alpha
        table: Effective table
        alpha: Level
        mollify_radius: Kernel radius, >= 2h
        p: Gradient offset (default 0)
        tol: Hull tolerance (default: lattice spacing)
        precondition_tol: Subsolution tolerance (default: tol x table Lipschitz constant)

    Raises:
        PreconditionViolation: If z is not a discrete subsolution
        ConfigurationError: If the radius is too small
    """
    grid = z.grid
    d = grid.dimension
    offset = np.zeros(d) if p is None else as_gradient(p, d)
    used_tol = table.spacing if tol is None else tol
    pre_tol = used_tol * max(1.0, table.lipschitz()) if precondition_tol is None else precondition_tol

    interior = grid.interior_mask(1)
    gradients = offset + stencil(z.values).central(grid.spacing)
    candidates = gradients[interior]
    if not table.contains(candidates):
        worst = candidates[int(np.argmax(table.outside_distance(candidates)))]
        raise PreconditionViolation(
            "discrete gradients of z leave the table window", witness={"gradient": worst.tolist()}
        )
    defect_field = table.interpolate(candidates) - alpha
    defect = float(np.max(defect_field))
    if defect > pre_tol:
        worst = candidates[int(np.argmax(defect_field))]
        raise PreconditionViolation(
            f"z is not a discrete subsolution at level {alpha} (defect {defect:.3g})",
            witness={"gradient": worst.tolist(), "defect": defect},
        )

    smooth = mollify_field(z.values, grid.spacing, mollify_radius)
    margin = int(math.ceil(mollify_radius / grid.spacing)) + 1
    mask = grid.interior_mask(margin)
    smooth_grad = (offset + stencil(smooth).central(grid.spacing))[mask]
    hull = convex_hull(sublevel_set(table, alpha))
    excess = hull.excess(smooth_grad) if smooth_grad.size else np.zeros(0)
    worst_excess = float(np.max(excess, initial=-math.inf))
    worst_point = None
    if excess.size:
        coords = grid.coordinates()
        node_coords = coords[mask] if d == 2 else coords[mask][:, None]
        worst_point = tuple(float(c) for c in node_coords[int(np.argmax(excess))])
    result = MollifyCheck(
        passed=bool(worst_excess <= used_tol),
        worst_excess=worst_excess,
        worst_point=worst_point,
        checked_nodes=int(excess.size),
        precondition_defect=defect,
        tol=used_tol,
    )
    logger.info("mollify_and_check", passed=result.passed, worst_excess=worst_excess)
    return result
