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
SVG figures: contour and hull overlays, error-vs-eps curves, ratio-vs-radius.

Figures are built on ``matplotlib.figure.Figure`` (no pyplot state), rendered
with a fixed SVG hash salt and no date metadata so identical runs write
identical bytes.
"""

from collections.abc import Sequence
from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib.figure import Figure

from homogenization_lab.effective import EffectiveTable
from homogenization_lab.geometry import Classification, ConvexHull, SublevelSet

mpl.use("Agg")

STYLE = {
    "svg.hashsalt": "homogenization-lab",
    "svg.fonttype": "none",
    "axes.linewidth": 0.6,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "font.size": 8,
    "legend.fontsize": 7,
    "lines.linewidth": 1.0,
    "figure.figsize": (4.5, 3.5),
}

_VERDICT_MARKERS = {"MinimalLevel": ("o", "tab:green"), "ExtremalBoundary": ("^", "tab:blue"), "NotCovered": ("x", "tab:red")}


def _save(fig: Figure, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_series(
    path: Path,
    x: Sequence[float],
    curves: dict[str, Sequence[float]],
    xlabel: str,
    ylabel: str,
    title: str = "",
    log_x: bool = False,
    log_y: bool = False,
) -> None:
    """Line plot of one or more curves against a shared x."""
    with mpl.rc_context(STYLE):
        fig = Figure()
        ax = fig.add_subplot()
        for label, values in curves.items():
            ax.plot(x, values, marker="o", markersize=3, label=label)
        if log_x:
            ax.set_xscale("log")
        if log_y:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(curves) > 1:
            ax.legend()
        fig.tight_layout()
        _save(fig, path)


def plot_table(path: Path, table: EffectiveTable, reference: Sequence[float] | None = None) -> None:
    """Hbar against p (1D) or filled contours of Hbar (2D)."""
    with mpl.rc_context(STYLE):
        fig = Figure()
        ax = fig.add_subplot()
        if table.dimension == 1:
            axis = table.axes[0]
            ax.plot(axis, table.hbar, marker="o", markersize=3, label="hbar")
            ax.plot(axis, table.hbar_low, linestyle="--", label="hbar_low")
            if reference is not None:
                ax.plot(axis, reference, linestyle=":", color="black", label="reference")
            ax.set_xlabel("p")
            ax.set_ylabel("Hbar")
            ax.legend()
        else:
            q1, q2 = np.meshgrid(*table.axes, indexing="ij")
            filled = ax.contourf(q1, q2, table.hbar, levels=20, cmap="viridis")
            fig.colorbar(filled, ax=ax, label="Hbar")
            ax.set_xlabel("p1")
            ax.set_ylabel("p2")
            ax.set_aspect("equal")
        fig.tight_layout()
        _save(fig, path)


def plot_sublevel_overlay(
    path: Path,
    sub: SublevelSet,
    hull: ConvexHull,
    classifications: Sequence[Classification] = (),
) -> None:
    """Sublevel set boundary, its convex hull and classified points."""
    with mpl.rc_context(STYLE):
        fig = Figure()
        ax = fig.add_subplot()
        if sub.dimension == 1:
            for a, b in sub.intervals:
                ax.plot([a, b], [0.0, 0.0], color="tab:orange", linewidth=3)
            verts = hull.vertices.reshape(-1)
            if verts.size:
                ax.plot([verts.min(), verts.max()], [0.1, 0.1], color="black", linewidth=1)
            for item in classifications:
                marker, colour = _VERDICT_MARKERS[item.verdict]
                ax.plot(item.p[0], -0.1, marker=marker, color=colour, linestyle="none")
            ax.set_yticks([])
            ax.set_ylim(-0.5, 0.5)
            ax.set_xlabel("p")
        else:
            for contour in sub.contours:
                ax.plot(contour[:, 0], contour[:, 1], color="tab:orange")
            if hull.vertices.shape[0] > 1:
                closed = np.vstack([hull.vertices, hull.vertices[:1]])
                ax.plot(closed[:, 0], closed[:, 1], color="black", linestyle="--")
            for item in classifications:
                marker, colour = _VERDICT_MARKERS[item.verdict]
                ax.plot(item.p[0], item.p[1], marker=marker, color=colour, markersize=3, linestyle="none")
            ax.set_aspect("equal")
            ax.set_xlabel("p1")
            ax.set_ylabel("p2")
        ax.set_title(f"alpha = {sub.alpha:.4g}")
        fig.tight_layout()
        _save(fig, path)
