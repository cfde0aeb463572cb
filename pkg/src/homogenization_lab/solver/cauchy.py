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
Explicit monotone schemes for the Cauchy problems

    u_t + H(Du, x / eps) = 0        (oscillatory)
    u_t + Hbar(Du) = 0              (effective, Hbar from a table)

Forward Euler in time with the Lax-Friedrichs flux; the step is
dt = cfl * h / (d * sigma) and each interval between snapshot times is split
into equal substeps no larger than that.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

from homogenization_lab.env import EnvironmentRealization
from homogenization_lab.errors import ConfigurationError, DomainRangeError, SolverDivergenceError
from homogenization_lab.hamiltonian import Hamiltonian
from homogenization_lab.logging import get_logger
from homogenization_lab.models.hamiltonian import HamiltonianSpec
from homogenization_lab.solver.grid_fn import GridFn
from homogenization_lab.solver.numerical_hamiltonian import lax_friedrichs, stencil, viscosity_for

if TYPE_CHECKING:
    from homogenization_lab.effective import EffectiveTable

logger = get_logger(__name__)

MAX_CFL = 0.9

Flux = Callable[[NDArray[np.float64]], NDArray[np.float64]]


@dataclass(frozen=True)
class CauchySolution:
    """
    Snapshots of an evolution.

    Attributes:
        snapshots: GridFns stamped with their times, in increasing time order
        dt: Largest time step used
        sigma: Viscosity used
        steps: Total number of time steps
    """

    snapshots: list[GridFn]
    dt: float
    sigma: float
    steps: int

    @property
    def times(self) -> list[float]:
        return [float(s.time) for s in self.snapshots if s.time is not None]

    def at(self, time: float) -> GridFn:
        """Snapshot recorded at ``time``."""
        for snap in self.snapshots:
            if snap.time is not None and abs(snap.time - time) <= 1e-12 * max(1.0, abs(time)):
                return snap
        raise KeyError(f"no snapshot at t={time}")

    def final(self) -> GridFn:
        return self.snapshots[-1]


def _snapshot_times(horizon: float, times: Sequence[float] | None) -> list[float]:
    if horizon <= 0:
        raise ConfigurationError(f"time horizon must be positive, got {horizon}")
    requested = list(times) if times is not None else [horizon / 4, horizon / 2, horizon]
    if any(t <= 0 or t > horizon * (1 + 1e-12) for t in requested):
        raise ConfigurationError("snapshot times must lie in (0, T]")
    return sorted(set(requested) | {horizon})


def _march(
    flux: Flux,
    u0: GridFn,
    horizon: float,
    dt_max: float,
    times: Sequence[float] | None,
) -> tuple[list[GridFn], int]:
    u = u0.values.copy()
    now = 0.0
    steps = 0
    snapshots: list[GridFn] = []
    for target in _snapshot_times(horizon, times):
        substeps = max(1, int(np.ceil((target - now) / dt_max - 1e-12)))
        dt = (target - now) / substeps
        for _ in range(substeps):
            u = u - dt * flux(u)
            steps += 1
        if not np.all(np.isfinite(u)):
            raise SolverDivergenceError(f"Cauchy solve produced non-finite values before t={target}")
        now = target
        snapshots.append(GridFn(grid=u0.grid, values=u.copy(), time=target))
    return snapshots, steps


def _check_cfl(cfl: float) -> None:
    if not 0 < cfl <= MAX_CFL:
        raise ConfigurationError(f"cfl must lie in (0, {MAX_CFL}], got {cfl}")


def solve_cauchy(
    h: HamiltonianSpec | Hamiltonian,
    env: EnvironmentRealization,
    eps: float,
    u0: GridFn,
    horizon: float,
    cfl: float = 0.5,
    times: Sequence[float] | None = None,
) -> CauchySolution:
    """
    Solve u_t + H(Du, x / eps, omega) = 0 with u(0) = u0.

    Args:
        h: Hamiltonian
        env: Realization matching the Hamiltonian's env_spec
        eps: Scale parameter, > 0
        u0: Initial datum on the computational grid
        horizon: Final time T
        cfl: CFL number in (0, 0.9]
        times: Snapshot times (default T/4, T/2, T; T is always included)

    Returns:
        CauchySolution

    Raises:
        ConfigurationError: On invalid parameters
        SolverDivergenceError: If non-finite values appear
    """
    ham = h if isinstance(h, Hamiltonian) else Hamiltonian(h)
    _check_cfl(cfl)
    if eps <= 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    if env.spec != ham.spec.resolved_env_spec:
        raise ConfigurationError("environment realization does not match the Hamiltonian's env_spec")
    grid = u0.grid
    if grid.dimension != ham.dimension:
        raise ConfigurationError("grid and Hamiltonian dimensions differ")

    data_lipschitz = u0.lipschitz()
    top_level = ham.bound_above(data_lipschitz)
    radius = 1.05 * max(data_lipschitz, ham.sublevel_radius(top_level)) + 0.05
    sigma = viscosity_for(ham, radius)
    dt_max = cfl * grid.spacing / (grid.dimension * sigma)

    potential = env.potential(grid.coordinates() / eps)
    p0 = np.zeros(grid.dimension)

    def flux(u: NDArray[np.float64]) -> NDArray[np.float64]:
        return lax_friedrichs(ham, p0, u, potential, grid.spacing, sigma)

    snapshots, steps = _march(flux, u0, horizon, dt_max, times)
    logger.debug("cauchy_solved", eps=eps, horizon=horizon, steps=steps, sigma=sigma)
    return CauchySolution(snapshots=snapshots, dt=dt_max, sigma=sigma, steps=steps)


def solve_effective_cauchy(
    table: "EffectiveTable",
    u0: GridFn,
    horizon: float,
    cfl: float = 0.5,
    times: Sequence[float] | None = None,
) -> CauchySolution:
    """
    Solve u_t + Hbar(Du) = 0 with Hbar interpolated from an effective table.

    Raises:
        ConfigurationError: On invalid parameters
        DomainRangeError: If a discrete gradient leaves the table window
        SolverDivergenceError: If non-finite values appear
    """
    _check_cfl(cfl)
    grid = u0.grid
    if grid.dimension != table.dimension:
        raise ConfigurationError("grid and table dimensions differ")
    sigma = max(table.lipschitz(), 1e-12)
    dt_max = cfl * grid.spacing / (grid.dimension * sigma)
    hs = grid.spacing

    def flux(u: NDArray[np.float64]) -> NDArray[np.float64]:
        nb = stencil(u)
        q = nb.central(hs)
        if not table.contains(q):
            worst = q.reshape(-1, grid.dimension)[int(np.argmax(table.outside_distance(q).ravel()))]
            raise DomainRangeError(f"gradient {worst.tolist()} leaves the effective table window")
        laplacian = nb.neighbour_sum() - 2.0 * u.ndim * u
        return table.interpolate(q) - sigma / (2.0 * hs) * laplacian

    snapshots, steps = _march(flux, u0, horizon, dt_max, times)
    logger.debug("effective_cauchy_solved", horizon=horizon, steps=steps, sigma=sigma)
    return CauchySolution(snapshots=snapshots, dt=dt_max, sigma=sigma, steps=steps)
