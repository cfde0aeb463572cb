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
Metric problem: maximal subsolution of H(p + Dm, y) <= level with m(source) = 0.

Red-black Gauss-Seidel on the Lax-Friedrichs scheme, started from the obstacle
C1 |x - source| with C1 = r(level) + |p| plus margin. Away from the boundary
the node update has the closed form

    m_i <- min(m_i, obstacle_i, [(level - H(p + D_c m_i, y_i)) * 2h / sigma + S_i] / (2d))

where S_i sums the 2d neighbours; a node's stencil only touches nodes of the
other colour, so each colour is updated in one vectorized pass. Boundary nodes
see their own value through the ghost closure and are updated by vectorized
bisection on the (monotone) local scheme.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import RegularGridInterpolator

from homogenization_lab.config import settings
from homogenization_lab.env import EnvironmentRealization
from homogenization_lab.errors import (
    ConfigurationError,
    DomainRangeError,
    NoSubsolutionError,
    SolverDivergenceError,
)
from homogenization_lab.hamiltonian import Hamiltonian, as_gradient
from homogenization_lab.logging import get_logger
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.hamiltonian import HamiltonianSpec
from homogenization_lab.solver.grid_fn import GridFn
from homogenization_lab.solver.numerical_hamiltonian import lax_friedrichs, stencil, viscosity_for

logger = get_logger(__name__)

_BISECTION_STEPS = 60
_BRACKET_DOUBLINGS = 60


@dataclass(frozen=True)
class MetricSolveResult:
    """
    Discrete metric m(., source) with diagnostics.

    Attributes:
        m: Node values, m(source) = 0
        source: Source node index
        level: Level of the metric problem
        p: Macroscopic gradient
        obstacle_constant: C1 in the obstacle C1 |x - source|
        sigma: Viscosity used
        sweeps: Red-black sweeps performed
        subsolution_defect: max(H_LF - level) over every node but the source,
            boundary nodes included (ghost closure)
        equation_defect: max |H_LF - level| over interior nodes where the
            obstacle is inactive
        active_nodes: Nodes held at the obstacle
        unsatisfied_boundary: Boundary nodes where no admissible value was found
    """

    m: GridFn
    source: tuple[int, ...]
    level: float
    p: tuple[float, ...]
    obstacle_constant: float
    sigma: float
    sweeps: int
    subsolution_defect: float
    equation_defect: float
    active_nodes: int
    unsatisfied_boundary: int

    def sample(self, points: ArrayLike) -> NDArray[np.float64]:
        """
        Linearly interpolate m at arbitrary points inside the grid box.

        Raises:
            DomainRangeError: If a point lies outside the grid
        """
        grid = self.m.grid
        pts = np.asarray(points, dtype=np.float64)
        flat = pts.reshape(-1, 1) if grid.dimension == 1 else pts.reshape(-1, 2)
        if flat.size and np.max(np.abs(flat)) > grid.half_width * (1 + 1e-12):
            raise DomainRangeError("sample point outside the metric grid")
        interp = RegularGridInterpolator((grid.axis(),) * grid.dimension, self.m.values)
        batch = pts.shape if grid.dimension == 1 else pts.shape[:-1]
        return interp(flat).reshape(batch)


class _BoundaryUpdater:
    """Vectorized bisection for boundary nodes of one colour."""

    def __init__(
        self,
        ham: Hamiltonian,
        p: NDArray[np.float64],
        potential: NDArray[np.float64],
        h: float,
        sigma: float,
        level: float,
        nodes: NDArray[np.int64],
    ):
        self.ham = ham
        self.p = p
        self.h = h
        self.sigma = sigma
        self.level = level
        self.nodes = nodes
        size = potential.size
        index = np.arange(size, dtype=np.float64).reshape(potential.shape)
        nb = stencil(index)
        self.plus = nb.plus.reshape(size, -1).astype(np.int64)[nodes]
        self.minus = nb.minus.reshape(size, -1).astype(np.int64)[nodes]
        self.self_plus = self.plus == nodes[:, None]
        self.self_minus = self.minus == nodes[:, None]
        self.potential = potential.ravel()[nodes]

    def scheme(self, x: NDArray[np.float64], flat: NDArray[np.float64]) -> NDArray[np.float64]:
        up = np.where(self.self_plus, x[:, None], flat[self.plus])
        down = np.where(self.self_minus, x[:, None], flat[self.minus])
        q = self.p + (up - down) / (2.0 * self.h)
        laplacian = np.sum(up + down - 2.0 * x[:, None], axis=-1)
        return self.ham.value(q, self.potential) - self.sigma / (2.0 * self.h) * laplacian

    def update(self, flat: NDArray[np.float64], scale: float) -> int:
        if self.nodes.size == 0:
            return 0
        hi = flat[self.nodes].copy()
        needs = self.scheme(hi, flat) > self.level
        if not np.any(needs):
            return 0
        lo = hi.copy()
        step = np.full(hi.shape, scale)
        found = ~needs
        for _ in range(_BRACKET_DOUBLINGS):
            trial = np.where(found, lo, hi - step)
            ok = self.scheme(trial, flat) <= self.level
            lo = np.where(found, lo, np.where(ok, trial, lo))
            found = found | ok
            if np.all(found):
                break
            step = step * 2.0
        bisect = needs & found
        upper = np.where(bisect, hi, lo)
        lower = lo
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (lower + upper)
            ok = self.scheme(mid, flat) <= self.level
            lower = np.where(bisect & ok, mid, lower)
            upper = np.where(bisect & ~ok, mid, upper)
        new = np.where(bisect, lower, hi)
        flat[self.nodes] = np.minimum(flat[self.nodes], new)
        return int(np.count_nonzero(needs & ~found))


def solve_metric(
    h: HamiltonianSpec | Hamiltonian,
    env: EnvironmentRealization,
    p: ArrayLike,
    level: float,
    source: tuple[int, ...] | None,
    grid: Grid,
    tol: float = 1e-6,
    max_sweeps: int | None = None,
    check_every: int = 10,
) -> MetricSolveResult:
    """
    Compute the maximal discrete subsolution m(., source) of the metric problem.

    Args:
        h: Hamiltonian
        env: Realization (y = x)
        p: Macroscopic gradient
        level: Level of the problem
        source: Source node index (default: the origin)
        grid: Computational grid
        tol: Defect tolerance
        max_sweeps: Sweep cap (defaults to settings.max_solver_iterations)
        check_every: Sweeps between defect evaluations

    Returns:
        MetricSolveResult

    Raises:
        ConfigurationError: On a source outside the grid or mismatched inputs
        NoSubsolutionError: If the level admits no subsolution or iterates
            run below the lower barrier
    """
    ham = h if isinstance(h, Hamiltonian) else Hamiltonian(h)
    if env.spec != ham.spec.resolved_env_spec:
        raise ConfigurationError("environment realization does not match the Hamiltonian's env_spec")
    if grid.dimension != ham.dimension:
        raise ConfigurationError("grid and Hamiltonian dimensions differ")
    src = grid.origin_index if source is None else tuple(int(i) for i in source)
    if len(src) != grid.dimension or any(not 0 <= i < grid.nodes_per_axis for i in src):
        raise ConfigurationError(f"source {src} is not a node of the grid")

    p_vec = as_gradient(p, ham.dimension)
    potential = env.potential(grid.coordinates())
    floor = ham.pointwise_minimum(potential)
    if np.any(floor > level):
        worst = np.unravel_index(int(np.argmax(floor)), grid.shape)
        raise NoSubsolutionError(
            f"level {level:.6g} lies below min_q H at node {tuple(int(i) for i in worst)} "
            f"(min_q H = {float(np.max(floor)):.6g}); no subsolution exists"
        )

    hs = grid.spacing
    d = grid.dimension
    p_norm = float(np.linalg.norm(p_vec))
    reach = ham.sublevel_radius(level) + p_norm
    c1 = 1.05 * reach + 0.05
    sigma = viscosity_for(ham, p_norm + c1)

    offsets = grid.coordinates() - (grid.node_point(src)[0] if d == 1 else grid.node_point(src))
    distance = np.abs(offsets) if d == 1 else np.linalg.norm(offsets, axis=-1)
    obstacle = c1 * distance
    barrier = -c1 * distance
    m = obstacle.copy()
    m[src] = 0.0

    indices = np.indices(grid.shape)
    colour = np.sum(indices, axis=0) % 2
    interior = grid.interior_mask(1)
    not_source = np.ones(grid.shape, dtype=bool)
    not_source[src] = False
    interior_masks = [(colour == c) & interior & not_source for c in (0, 1)]
    boundary_updaters = [
        _BoundaryUpdater(
            ham, p_vec, potential, hs, sigma, level, np.flatnonzero(((colour == c) & ~interior & not_source).ravel())
        )
        for c in (0, 1)
    ]
    equation_mask = interior & not_source
    cap = max_sweeps or settings.max_solver_iterations

    sweeps = 0
    unsatisfied = 0
    sub_defect = eq_defect = float("inf")
    history: list[float] = []
    while sweeps < cap:
        unsatisfied = 0
        for c in (0, 1):
            nb = stencil(m)
            h_val = ham.value(p_vec + nb.central(hs), potential)
            candidate = ((level - h_val) * 2.0 * hs / sigma + nb.neighbour_sum()) / (2.0 * d)
            mask = interior_masks[c]
            m[mask] = np.minimum(np.minimum(m[mask], candidate[mask]), obstacle[mask])
            flat = m.reshape(-1)
            unsatisfied += boundary_updaters[c].update(flat, scale=max(hs * c1, hs))
            m = np.minimum(flat.reshape(grid.shape), obstacle)
            m[src] = 0.0
        sweeps += 1
        if not np.all(np.isfinite(m)) or np.any(m < barrier - tol):
            raise NoSubsolutionError(
                f"metric iterates fell below -C1|x| at level {level:.6g}; the level admits no subsolution",
                residual_history=history,
            )
        if sweeps % check_every == 0:
            defect = lax_friedrichs(ham, p_vec, m, potential, hs, sigma) - level
            sub_defect = float(np.max(defect[not_source], initial=-np.inf))
            inactive = equation_mask & (m < obstacle - 1e-12 * max(1.0, c1))
            eq_defect = float(np.max(np.abs(defect[inactive]), initial=0.0))
            history.append(max(sub_defect, eq_defect))
            if sub_defect <= tol and eq_defect <= tol:
                break
    else:
        raise SolverDivergenceError(
            f"metric sweeps did not converge within {cap} sweeps (defect {history[-1] if history else float('nan'):.3g})",
            residual_history=history,
        )

    active = int(np.count_nonzero(np.isclose(m, obstacle) & not_source))
    result = MetricSolveResult(
        m=GridFn(grid=grid, values=m),
        source=src,
        level=level,
        p=tuple(float(c) for c in p_vec),
        obstacle_constant=c1,
        sigma=sigma,
        sweeps=sweeps,
        subsolution_defect=sub_defect,
        equation_defect=eq_defect,
        active_nodes=active,
        unsatisfied_boundary=unsatisfied,
    )
    logger.debug("metric_solved", metric_level=level, sweeps=sweeps, defect=max(sub_defect, eq_defect))
    return result
