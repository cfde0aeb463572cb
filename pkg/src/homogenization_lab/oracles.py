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
Reference values for one-dimensional periodic problems.

For convex radial G and a 1D periodic potential with period l, the effective
Hamiltonian is max V when |p| is small and otherwise the level lambda solving

    (1 / l) * integral_0^l G^{-1}(lambda - V(y)) dy = |p|.

Eikonal and cosine potential give the closed form max(|p|, amp).
"""

import math
from collections.abc import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, optimize

from homogenization_lab.effective import EffectiveTable
from homogenization_lab.errors import ConfigurationError
from homogenization_lab.models.effective import PLattice
from homogenization_lab.models.hamiltonian import HamiltonianSpec

InverseProfile = Callable[[float], float]

_INVERSES: dict[str, InverseProfile] = {
    "eikonal": lambda s: max(s, 0.0),
    "quadratic": lambda s: math.sqrt(max(s, 0.0)),
}


def eikonal_cosine_hbar(p: float, amplitude: float = 1.0) -> float:
    """Hbar(p) = max(|p|, amp) for H = |p| + amp cos(2 pi y / l)."""
    return max(abs(p), amplitude)


def convex_radial_hbar(
    p: float,
    inverse: InverseProfile,
    potential: Callable[[float], float],
    period: float,
    v_max: float,
) -> float:
    """
    Effective Hamiltonian of G(|p|) + V(y) in 1D by quadrature and root finding.

    Args:
        p: Macroscopic gradient
        inverse: G^{-1} on [0, inf)
        potential: Periodic potential V
        period: Period l of V
        v_max: max V

    Returns:
        Hbar(p)
    """

    def mean_inverse(level: float) -> float:
        value, _ = integrate.quad(lambda y: inverse(level - potential(y)), 0.0, period, limit=200)
        return value / period

    target = abs(p)
    if mean_inverse(v_max) >= target:
        return v_max
    upper = v_max + 1.0
    while mean_inverse(upper) < target:
        upper = v_max + 2.0 * (upper - v_max)
    return float(optimize.brentq(lambda lam: mean_inverse(lam) - target, v_max, upper, xtol=1e-12))


def oracle_hbar(spec: HamiltonianSpec, p: float) -> float:
    """
    Reference Hbar for 1D periodic_cosine environments with eikonal or quadratic G.

    Raises:
        ConfigurationError: If no oracle covers the spec
    """
    env = spec.resolved_env_spec
    if env.dimension != 1 or env.family != "periodic_cosine" or spec.family not in _INVERSES:
        raise ConfigurationError(
            "oracles cover 1D periodic_cosine environments with eikonal or quadratic Hamiltonians"
        )
    amp, ell = env.amplitude, env.length_scale
    if spec.family == "eikonal":
        return eikonal_cosine_hbar(p, amp) + spec.constant
    value = convex_radial_hbar(
        p,
        _INVERSES[spec.family],
        lambda y: amp * math.cos(2.0 * math.pi * y / ell),
        ell,
        amp,
    )
    return value + spec.constant


def has_oracle(spec: HamiltonianSpec) -> bool:
    env = spec.resolved_env_spec
    return env.dimension == 1 and env.family == "periodic_cosine" and spec.family in _INVERSES


def oracle_table(spec: HamiltonianSpec, lattice: PLattice) -> EffectiveTable:
    """Exact effective table on a 1D lattice."""
    if lattice.dimension != 1:
        raise ConfigurationError("oracle tables are one-dimensional")
    axis = lattice.axes()[0]
    values = np.array([oracle_hbar(spec, float(p)) for p in axis])
    return EffectiveTable.from_values((axis,), values)


def hopf_lax_flat_eikonal(
    u0: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    points: ArrayLike,
    time: float,
    level: float = 0.0,
    samples: int = 4001,
) -> NDArray[np.float64]:
    """
    Hopf-Lax value for Hbar(q) = max(|q|, level) in 1D.

    The Lagrangian is level * (|v| - 1) on |v| <= 1, so
    u(x, t) = min over |y - x| <= t of u0(y) + level * (|x - y| - t).

    Args:
        u0: Initial datum, vectorized
        points: Evaluation points
        time: Time t > 0
        level: Plateau level of Hbar (0 gives the plain eikonal)
        samples: Sampling density of the minimization

    Returns:
        Values at ``points``
    """
    xs = np.atleast_1d(np.asarray(points, dtype=np.float64))
    offsets = np.linspace(-time, time, samples)
    candidates = xs[:, None] + offsets[None, :]
    values = u0(candidates) + level * (np.abs(offsets)[None, :] - time)
    return np.min(values, axis=1)


def oracle_errors(spec: HamiltonianSpec, points: Sequence[float], estimates: Sequence[float]) -> list[float]:
    """|estimate - oracle| at each point."""
    return [abs(e - oracle_hbar(spec, float(p))) for p, e in zip(points, estimates)]
