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
Lax-Friedrichs numerical Hamiltonian.

    H_LF(u)_i = H(p + D_c u_i, y_i) - sigma / (2 h) * sum_k (u_{i+e_k} - 2 u_i + u_{i-e_k})

with central differences D_c. The ghost value beyond the boundary equals the
boundary value, which keeps the scheme monotone: H_LF is nondecreasing in u_i
and nonincreasing in every neighbour whenever sigma bounds |H_q| on the
gradient range.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from homogenization_lab.hamiltonian import Hamiltonian


@dataclass(frozen=True)
class Stencil:
    """
    Neighbour values of a node array under the copy-boundary closure.

    Attributes:
        plus: u_{i+e_k}, shape (*grid, d)
        minus: u_{i-e_k}, shape (*grid, d)
    """

    plus: NDArray[np.float64]
    minus: NDArray[np.float64]

    def central(self, h: float) -> NDArray[np.float64]:
        """Central differences, shape (*grid, d)."""
        return (self.plus - self.minus) / (2.0 * h)

    def neighbour_sum(self) -> NDArray[np.float64]:
        """Sum over all 2d neighbours."""
        return np.sum(self.plus + self.minus, axis=-1)


def stencil(u: NDArray[np.float64]) -> Stencil:
    """Gather neighbour values with ghost nodes copying the boundary."""
    padded = np.pad(u, 1, mode="edge")
    dimension = u.ndim
    plus, minus = [], []
    for k in range(dimension):
        core = [slice(1, -1)] * dimension
        hi, lo = list(core), list(core)
        hi[k] = slice(2, None)
        lo[k] = slice(None, -2)
        plus.append(padded[tuple(hi)])
        minus.append(padded[tuple(lo)])
    return Stencil(plus=np.stack(plus, axis=-1), minus=np.stack(minus, axis=-1))


def lax_friedrichs(
    ham: Hamiltonian,
    p: NDArray[np.float64],
    u: NDArray[np.float64],
    v: NDArray[np.float64],
    h: float,
    sigma: float,
) -> NDArray[np.float64]:
    """
    Evaluate H_LF at every node.

    Args:
        ham: Hamiltonian
        p: Macroscopic gradient, shape (d,)
        u: Node values, shape of the grid
        v: Potential values at the nodes
        h: Grid spacing
        sigma: Artificial viscosity (>= |H_q| on the gradient range)

    Returns:
        Array with the grid shape
    """
    nb = stencil(u)
    q = p + nb.central(h)
    laplacian = nb.neighbour_sum() - 2.0 * u.ndim * u
    return ham.value(q, v) - sigma / (2.0 * h) * laplacian


def viscosity_for(ham: Hamiltonian, gradient_radius: float) -> float:
    """Smallest admissible sigma for gradients of norm at most ``gradient_radius``."""
    return max(ham.lipschitz_p(gradient_radius), 1e-12)
