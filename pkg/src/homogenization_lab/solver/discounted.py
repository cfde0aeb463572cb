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
Discounted cell problem.

Solves delta * v + H_LF(p + Dv, y) = 0 on a truncated grid. The default method
is a damped semismooth Newton iteration on the monotone scheme, whose Jacobian
is a sparse M-matrix while gradients stay in the viscosity range; pseudo-time
relaxation v <- v - tau * (delta * v + H_LF(v)) is the fallback and can be
selected explicitly.
"""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray
from scipy.sparse.linalg import spsolve

from homogenization_lab.config import settings
from homogenization_lab.env import EnvironmentRealization
from homogenization_lab.errors import ConfigurationError, SolverDivergenceError
from homogenization_lab.hamiltonian import Hamiltonian, as_gradient
from homogenization_lab.logging import get_logger
from homogenization_lab.models.grid import Grid
from homogenization_lab.models.hamiltonian import HamiltonianSpec
from homogenization_lab.solver.grid_fn import GridFn
from homogenization_lab.solver.numerical_hamiltonian import lax_friedrichs, stencil, viscosity_for

logger = get_logger(__name__)

SolveMethod = Literal["newton", "relaxation"]

_MAX_NEWTON_STEPS = 200
_MIN_DAMPING = 1.0 / 64.0


@dataclass(frozen=True)
class DiscountedSolveResult:
    """
    Solution of the discounted problem with its diagnostics.

    Attributes:
        v: Node values v^delta
        delta: Discount factor
        p: Macroscopic gradient
        residual: max |delta v + H_LF| on the trusted interior
        max_residual: Same over all nodes
        iterations: Newton steps plus relaxation sweeps
        sup_delta_v: max |delta v|
        lipschitz: Discrete Lipschitz constant of v
        sigma: Viscosity used
        method: Method that produced the final iterate
        residual_history: Residual after each iteration
    """

    v: GridFn
    delta: float
    p: tuple[float, ...]
    residual: float
    max_residual: float
    iterations: int
    sup_delta_v: float
    lipschitz: float
    sigma: float
    method: str
    residual_history: list[float] = field(default_factory=list)

    def origin_estimate(self) -> float:
        """-delta * v(0), the point estimate of the effective Hamiltonian."""
        return -self.delta * self.v.at_origin()


class _DiscountedOperator:
    """F(v) = delta * v + H_LF(v) with its sparse Jacobian."""

    def __init__(
        self,
        ham: Hamiltonian,
        p: NDArray[np.float64],
        potential: NDArray[np.float64],
        delta: float,
        h: float,
        sigma: float,
    ):
        self.ham = ham
        self.p = p
        self.potential = potential
        self.delta = delta
        self.h = h
        self.sigma = sigma
        shape = potential.shape
        self.size = potential.size
        index = np.arange(self.size, dtype=np.float64).reshape(shape)
        nb = stencil(index)
        self.plus_index = nb.plus.reshape(self.size, -1).astype(np.int64)
        self.minus_index = nb.minus.reshape(self.size, -1).astype(np.int64)

    def residual(self, v: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.delta * v + lax_friedrichs(self.ham, self.p, v, self.potential, self.h, self.sigma)

    def jacobian(self, v: NDArray[np.float64]) -> sp.csr_matrix:
        nb = stencil(v)
        q = self.p + nb.central(self.h)
        grad = self.ham.gradient(q, self.potential).reshape(self.size, -1)
        d = grad.shape[-1]
        rows = np.arange(self.size)
        scale = 1.0 / (2.0 * self.h)
        row_blocks = [rows]
        col_blocks = [rows]
        data_blocks = [np.full(self.size, self.delta + d * self.sigma / self.h)]
        for k in range(d):
            row_blocks += [rows, rows]
            col_blocks += [self.plus_index[:, k], self.minus_index[:, k]]
            data_blocks += [(grad[:, k] - self.sigma) * scale, (-grad[:, k] - self.sigma) * scale]
        jac = sp.coo_matrix(
            (np.concatenate(data_blocks), (np.concatenate(row_blocks), np.concatenate(col_blocks))),
            shape=(self.size, self.size),
        )
        return jac.tocsr()


def _newton(
    op: _DiscountedOperator,
    v: NDArray[np.float64],
    tol: float,
    history: list[float],
) -> tuple[NDArray[np.float64], bool, int]:
    shape = v.shape
    res_vec = op.residual(v)
    res = float(np.max(np.abs(res_vec)))
    for step in range(_MAX_NEWTON_STEPS):
        history.append(res)
        if res <= tol:
            return v, True, step
        step_dir = spsolve(op.jacobian(v), -res_vec.ravel()).reshape(shape)
        if not np.all(np.isfinite(step_dir)):
            return v, False, step
        damping = 1.0
        while damping >= _MIN_DAMPING:
            candidate = v + damping * step_dir
            cand_vec = op.residual(candidate)
            cand_res = float(np.max(np.abs(cand_vec)))
            if cand_res < (1.0 - 1e-4 * damping) * res:
                v, res_vec, res = candidate, cand_vec, cand_res
                break
            damping *= 0.5
        else:
            return v, False, step
    history.append(res)
    return v, res <= tol, _MAX_NEWTON_STEPS


def _relaxation(
    op: _DiscountedOperator,
    v: NDArray[np.float64],
    tol: float,
    tau: float,
    max_iterations: int,
    history: list[float],
) -> tuple[NDArray[np.float64], bool, int]:
    for it in range(max_iterations):
        res_vec = op.residual(v)
        res = float(np.max(np.abs(res_vec)))
        if not np.isfinite(res):
            raise SolverDivergenceError("relaxation produced non-finite values", residual_history=history)
        if it % 100 == 0:
            history.append(res)
        if res <= tol:
            history.append(res)
            return v, True, it
        v = v - tau * res_vec
    return v, False, max_iterations


def minimum_viscosity(h: HamiltonianSpec | Hamiltonian, p: ArrayLike) -> float:
    """Smallest sigma keeping the scheme monotone for the discounted problem at p."""
    ham = h if isinstance(h, Hamiltonian) else Hamiltonian(h)
    p_vec = as_gradient(p, ham.dimension)
    p_norm = float(np.linalg.norm(p_vec))
    gradient_radius = 1.05 * max(ham.sublevel_radius(ham.upper_at(p_vec)), p_norm) + 0.05
    return viscosity_for(ham, gradient_radius)


def solve_discounted(
    h: HamiltonianSpec | Hamiltonian,
    env: EnvironmentRealization,
    p: ArrayLike,
    delta: float,
    grid: Grid,
    tol: float = 1e-8,
    method: SolveMethod = "newton",
    cfl: float = 0.5,
    sigma: float | None = None,
    max_iterations: int | None = None,
) -> DiscountedSolveResult:
    """
    Solve delta * v + H(p + Dv, y) = 0 on ``grid``.

    Args:
        h: Hamiltonian (spec or built)
        env: Realization matching the Hamiltonian's env_spec
        p: Macroscopic gradient
        delta: Discount factor, > 0
        grid: Computational grid
        tol: Residual tolerance
        method: ``newton`` (with relaxation fallback) or ``relaxation``
        cfl: Pseudo-time CFL number for relaxation
        sigma: Viscosity override; must bound |H_q| on the gradient range
        max_iterations: Relaxation cap (defaults to settings.max_solver_iterations)

    Returns:
        DiscountedSolveResult

    Raises:
        ConfigurationError: On invalid parameters or a non-monotone scheme
        SolverDivergenceError: If the iteration does not reach ``tol``
    """
    ham = h if isinstance(h, Hamiltonian) else Hamiltonian(h)
    if delta <= 0:
        raise ConfigurationError(f"delta must be positive, got {delta}")
    if grid.dimension != ham.dimension:
        raise ConfigurationError(f"grid dimension {grid.dimension} != Hamiltonian dimension {ham.dimension}")
    if env.spec != ham.spec.resolved_env_spec:
        raise ConfigurationError("environment realization does not match the Hamiltonian's env_spec")
    if not 0 < cfl <= 1:
        raise ConfigurationError(f"cfl must lie in (0, 1], got {cfl}")

    p_vec = as_gradient(p, ham.dimension)
    required = minimum_viscosity(ham, p_vec)
    if sigma is None:
        sigma = required
    elif sigma < required:
        raise ConfigurationError(
            f"sigma={sigma:.6g} below |H_q| bound {required:.6g}; the scheme would not be monotone"
        )

    d = grid.dimension
    hs = grid.spacing
    tau = cfl * hs / (d * sigma)
    if tau * (delta + d * sigma / hs) > 1.0 + 1e-12:
        raise ConfigurationError("pseudo-time step violates the monotonicity condition; lower cfl")

    potential = env.potential(grid.coordinates())
    op = _DiscountedOperator(ham, p_vec, potential, delta, hs, sigma)
    mean_h = float(np.mean(ham.value(np.broadcast_to(p_vec, potential.shape + (d,)), potential)))
    v = np.full(grid.shape, -mean_h / delta)

    history: list[float] = []
    used = method
    converged = False
    iterations = 0
    if method == "newton":
        v, converged, iterations = _newton(op, v, tol, history)
        if not converged:
            logger.warning("newton_fallback", p=p_vec.tolist(), delta=delta, residual=history[-1] if history else None)
            used = "relaxation"
    if not converged:
        cap = max_iterations or settings.max_solver_iterations
        v, converged, sweeps = _relaxation(op, v, tol, tau, cap, history)
        iterations += sweeps
    if not converged or not np.all(np.isfinite(v)):
        raise SolverDivergenceError(
            f"discounted solve did not reach tol={tol:g} (p={p_vec.tolist()}, delta={delta})",
            residual_history=history,
        )

    residual = np.abs(op.residual(v))
    v_fn = GridFn(grid=grid, values=v)
    result = DiscountedSolveResult(
        v=v_fn,
        delta=delta,
        p=tuple(float(c) for c in p_vec),
        residual=float(np.max(residual[grid.trusted_mask()])),
        max_residual=float(np.max(residual)),
        iterations=iterations,
        sup_delta_v=float(np.max(np.abs(delta * v))),
        lipschitz=v_fn.lipschitz(),
        sigma=sigma,
        method=used,
        residual_history=history,
    )
    logger.debug(
        "discounted_solved",
        p=result.p,
        delta=delta,
        method=used,
        iterations=result.iterations,
        residual=result.residual,
    )
    return result
