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
Hamiltonian evaluation.

``Hamiltonian`` wraps a HamiltonianSpec with vectorized evaluation of H and
its p-gradient, plus the bounds the solvers need: the coercivity modulus, the
sublevel radius, p-Lipschitz constants and sup-norm bounds on balls.

Gradient arrays always carry a trailing axis of length d; potential values have
the matching batch shape.
"""

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, Field, ValidationError

from homogenization_lab.config import settings
from homogenization_lab.env import EnvironmentRealization, realize
from homogenization_lab.errors import ConfigurationError, PreconditionViolation
from homogenization_lab.logging import get_logger
from homogenization_lab.models.hamiltonian import BASE_FAMILIES, HamiltonianSpec
from homogenization_lab.seeding import expand_seeds

logger = get_logger(__name__)

RadialFn = Callable[[NDArray[np.float64]], NDArray[np.float64]]

# Radius of the maximal |G'| on [0, 1] for the double well, 1 / sqrt(3).
_DOUBLE_WELL_TURN = 1.0 / math.sqrt(3.0)


@dataclass(frozen=True)
class RadialProfile:
    """
    Radial part G(r) of an additive Hamiltonian.

    Attributes:
        value: G(r)
        slope: G'(r)
        inverse: Largest r with G(r) <= level (0 when the set is empty)
        minimum: min over r of G
        monotone_from: Smallest r beyond which G is nondecreasing
    """

    value: RadialFn
    slope: RadialFn
    inverse: Callable[[float], float]
    minimum: float
    monotone_from: float


def _double_well_inverse(level: float) -> float:
    if level < 0:
        return 0.0
    return math.sqrt(1.0 + math.sqrt(level))


PROFILES: dict[str, RadialProfile] = {
    "eikonal": RadialProfile(
        value=lambda r: np.asarray(r, dtype=np.float64) * 1.0,
        slope=lambda r: np.ones_like(r, dtype=np.float64),
        inverse=lambda level: max(level, 0.0),
        minimum=0.0,
        monotone_from=0.0,
    ),
    "quadratic": RadialProfile(
        value=lambda r: r**2,
        slope=lambda r: 2.0 * r,
        inverse=lambda level: math.sqrt(max(level, 0.0)),
        minimum=0.0,
        monotone_from=0.0,
    ),
    "double_well": RadialProfile(
        value=lambda r: (r**2 - 1.0) ** 2,
        slope=lambda r: 4.0 * r * (r**2 - 1.0),
        inverse=_double_well_inverse,
        minimum=0.0,
        monotone_from=1.0,
    ),
}


def _norms(q: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.linalg.norm(q, axis=-1)


def _radial_gradient(q: NDArray[np.float64], slope: NDArray[np.float64]) -> NDArray[np.float64]:
    r = _norms(q)
    safe = np.where(r > 0, r, 1.0)
    return np.where((r > 0)[..., None], q * (slope / safe)[..., None], 0.0)


class Hamiltonian:
    """
    Vectorized H(q, y) built from a HamiltonianSpec.

    Attributes:
        spec: The validated spec
        amplitude: Certified bound on |V|
    """

    def __init__(self, spec: HamiltonianSpec):
        self.spec = spec
        self.family = spec.family
        self.dimension = spec.dimension
        self.amplitude = spec.resolved_env_spec.amplitude
        self.constant = spec.constant
        self.base: Hamiltonian | None = Hamiltonian(spec.base) if spec.base is not None else None
        self.radius = spec.radius
        self.alpha_bar = spec.alpha_bar
        if self.family == "convexified":
            assert self.base is not None and self.radius is not None
            profile = PROFILES[self.base.family]
            if self.radius < profile.monotone_from or float(profile.slope(np.asarray(self.radius))) <= 0:
                raise ConfigurationError(
                    f"convexified radius {self.radius} lies outside the increasing range "
                    f"of '{self.base.family}' (needs R > {profile.monotone_from})"
                )

    # -- radial parts -------------------------------------------------------

    def _profile_value(self, r: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.family in BASE_FAMILIES:
            return PROFILES[self.family].value(r)
        assert self.base is not None and self.radius is not None
        profile = PROFILES[self.base.family]
        big_r = np.asarray(self.radius)
        tangent = profile.value(big_r) + profile.slope(big_r) * (r - self.radius)
        return np.where(r >= self.radius, profile.value(r), tangent)

    def _profile_slope(self, r: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.family in BASE_FAMILIES:
            return PROFILES[self.family].slope(r)
        assert self.base is not None and self.radius is not None
        profile = PROFILES[self.base.family]
        return np.where(r >= self.radius, profile.slope(r), profile.slope(np.asarray(self.radius)))

    # -- evaluation ---------------------------------------------------------

    def value(self, q: ArrayLike, v: ArrayLike) -> NDArray[np.float64]:
        """
        Evaluate H at gradients ``q`` (trailing axis d) and potential values ``v``.
        """
        q_arr = np.asarray(q, dtype=np.float64)
        v_arr = np.asarray(v, dtype=np.float64)
        r = _norms(q_arr)
        if self.family == "surgery":
            assert self.base is not None and self.radius is not None and self.alpha_bar is not None
            inner = self.base.value(q_arr, v_arr)
            clamped = np.where(inner <= self.alpha_bar, inner, self.alpha_bar)
            outer = r**2 - self.radius**2 + self.alpha_bar
            core = np.where(r >= self.radius, outer, clamped)
        else:
            core = self._profile_value(r) + v_arr
        return core + self.constant

    def gradient(self, q: ArrayLike, v: ArrayLike) -> NDArray[np.float64]:
        """
        Evaluate the p-gradient of H (a selection at kinks).

        Returns:
            Array with the shape of ``q``
        """
        q_arr = np.asarray(q, dtype=np.float64)
        v_arr = np.asarray(v, dtype=np.float64)
        if self.family == "surgery":
            assert self.base is not None and self.radius is not None and self.alpha_bar is not None
            r = _norms(q_arr)
            inner_value = self.base.value(q_arr, v_arr)
            inner_grad = self.base.gradient(q_arr, v_arr)
            grad = np.where((inner_value <= self.alpha_bar)[..., None], inner_grad, 0.0)
            return np.where((r >= self.radius)[..., None], 2.0 * q_arr, grad)
        return _radial_gradient(q_arr, self._profile_slope(_norms(q_arr)))

    def evaluate(self, p: ArrayLike, y: ArrayLike, env: EnvironmentRealization) -> NDArray[np.float64]:
        """H(p, y, omega) for explicit points ``y`` in realization ``env``."""
        q = as_gradient(p, self.dimension)
        return self.value(q, env.potential(y))

    # -- bounds -------------------------------------------------------------

    def upper_at(self, p: ArrayLike) -> float:
        """Certified sup over y of H(p, y) (H is nondecreasing in V)."""
        q = as_gradient(p, self.dimension)
        return float(self.value(q, self.amplitude))

    def lower_at(self, p: ArrayLike) -> float:
        """Certified inf over y of H(p, y)."""
        q = as_gradient(p, self.dimension)
        return float(self.value(q, -self.amplitude))

    def pointwise_minimum(self, v: ArrayLike) -> NDArray[np.float64]:
        """min over q of H(q, y) given potential values V(y)."""
        v_arr = np.asarray(v, dtype=np.float64)
        if self.family == "surgery":
            assert self.base is not None and self.alpha_bar is not None
            return np.minimum(self.base.pointwise_minimum(v_arr), self.alpha_bar) + self.constant
        if self.family == "convexified":
            # linear below R with positive slope: minimum at r = 0
            return self._profile_value(np.zeros_like(v_arr)) + v_arr + self.constant
        return PROFILES[self.family].minimum + v_arr + self.constant

    def coercivity_modulus(self, r: float) -> float:
        """
        Lower bound c(r) <= inf { H(q, y) : |q| >= r, all y }.

        c is nondecreasing and tends to infinity.
        """
        r = max(float(r), 0.0)
        if self.family == "surgery":
            assert self.base is not None and self.radius is not None and self.alpha_bar is not None
            if r >= self.radius:
                return r**2 - self.radius**2 + self.alpha_bar + self.constant
            return min(self.base.coercivity_modulus(r), self.alpha_bar) + self.constant
        if self.family == "convexified":
            return float(self._profile_value(np.asarray(r))) - self.amplitude + self.constant
        profile = PROFILES[self.family]
        floor_r = max(r, profile.monotone_from)
        inf_g = float(profile.value(np.asarray(floor_r))) if r >= profile.monotone_from else profile.minimum
        return inf_g - self.amplitude + self.constant

    def sublevel_radius(self, level: float) -> float:
        """
        Radius r(level) with {q : H(q, y) <= level} contained in B_r for every y.
        """
        shifted = level - self.constant
        if self.family == "surgery":
            assert self.base is not None and self.radius is not None and self.alpha_bar is not None
            if shifted >= self.alpha_bar:
                return math.sqrt(self.radius**2 + shifted - self.alpha_bar)
            return min(self.base.sublevel_radius(shifted), self.radius)
        if self.family == "convexified":
            assert self.base is not None and self.radius is not None
            profile = PROFILES[self.base.family]
            target = shifted + self.amplitude
            g_r = float(profile.value(np.asarray(self.radius)))
            if target >= g_r:
                return profile.inverse(target)
            slope = float(profile.slope(np.asarray(self.radius)))
            return max(0.0, self.radius + (target - g_r) / slope)
        return PROFILES[self.family].inverse(shifted + self.amplitude)

    def lipschitz_p(self, radius: float) -> float:
        """Lipschitz constant of q -> H(q, y) on the ball B_radius."""
        radius = max(float(radius), 0.0)
        if self.family == "surgery":
            assert self.base is not None and self.radius is not None
            inner = self.base.lipschitz_p(min(radius, self.radius))
            return max(inner, 2.0 * radius) if radius > self.radius else inner
        if self.family == "convexified":
            assert self.radius is not None
            return float(abs(self._profile_slope(np.asarray(max(radius, self.radius)))))
        if self.family == "double_well":
            slope = PROFILES["double_well"].slope
            candidates = [radius, min(radius, _DOUBLE_WELL_TURN)]
            return max(float(abs(slope(np.asarray(c)))) for c in candidates)
        return float(abs(PROFILES[self.family].slope(np.asarray(radius))))

    def _radial_samples(self, radius: float) -> NDArray[np.float64]:
        radii = np.linspace(0.0, max(float(radius), 0.0), 2049)
        q = np.zeros((radii.size, self.dimension))
        q[:, 0] = radii
        return q

    def bound(self, radius: float) -> float:
        """C(R) = sup { |H(q, y)| : |q| <= R, all y }."""
        q = self._radial_samples(radius)
        high = self.value(q, self.amplitude)
        low = self.value(q, -self.amplitude)
        return float(max(np.max(np.abs(high)), np.max(np.abs(low))))

    def bound_above(self, radius: float) -> float:
        """sup { H(q, y) : |q| <= R, all y }."""
        return float(np.max(self.value(self._radial_samples(radius), self.amplitude)))

    def lipschitz(self, radius: float, env: EnvironmentRealization) -> float:
        """Lipschitz constant of (q, y) -> H on B_radius x R^d."""
        return self.lipschitz_p(radius) + env.lipschitz


def as_gradient(p: ArrayLike, dimension: int) -> NDArray[np.float64]:
    """Normalize a gradient (scalar allowed in 1D) to an array with trailing axis d."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim == 0:
        if dimension != 1:
            raise ValueError("scalar gradients are only allowed in 1D")
        arr = arr.reshape(1)
    if arr.shape[-1] != dimension:
        raise ValueError(f"gradient must have {dimension} components, got shape {arr.shape}")
    return arr


def coerce_hamiltonian_spec(spec: HamiltonianSpec | Mapping[str, Any]) -> HamiltonianSpec:
    """
    Validate a raw mapping into a HamiltonianSpec.

    Raises:
        ConfigurationError: If validation fails
    """
    if isinstance(spec, HamiltonianSpec):
        return spec
    try:
        return HamiltonianSpec.model_validate(dict(spec))
    except ValidationError as e:
        raise ConfigurationError(f"invalid Hamiltonian spec: {e}") from e


def build(spec: HamiltonianSpec | Mapping[str, Any]) -> Hamiltonian:
    """Build an evaluable Hamiltonian from a spec or raw mapping."""
    return Hamiltonian(coerce_hamiltonian_spec(spec))


def evaluate(h: HamiltonianSpec | Hamiltonian, p: ArrayLike, y: ArrayLike, env: EnvironmentRealization) -> NDArray[np.float64]:
    """
    Evaluate H(p, y, omega).

    Raises:
        ConfigurationError: If the realization's law differs from the Hamiltonian's
    """
    ham = h if isinstance(h, Hamiltonian) else Hamiltonian(h)
    if env.spec != ham.spec.resolved_env_spec:
        raise ConfigurationError("environment realization does not match the Hamiltonian's env_spec")
    return ham.evaluate(p, y, env)


def _random_directions(rng: np.random.Generator, count: int, dimension: int) -> NDArray[np.float64]:
    if dimension == 1:
        return np.where(rng.random(count) < 0.5, -1.0, 1.0)[:, None]
    angles = rng.uniform(0.0, 2.0 * math.pi, size=count)
    return np.stack([np.cos(angles), np.sin(angles)], axis=-1)


def _probe_potentials(
    env_spec: Any, rng: np.random.Generator, count: int, seeds: list[int], spread: float
) -> NDArray[np.float64]:
    values = np.empty(count)
    per_seed = np.array_split(np.arange(count), len(seeds))
    for seed, idx in zip(seeds, per_seed):
        if idx.size == 0:
            continue
        env = realize(env_spec, seed)
        shape = (idx.size,) if env_spec.dimension == 1 else (idx.size, 2)
        values[idx] = env.potential(rng.uniform(-spread, spread, size=shape))
    return values


def make_surgery(
    base: HamiltonianSpec,
    alpha_bar: float,
    radius: float,
    probes: int | None = None,
    seed: int = 0,
) -> HamiltonianSpec:
    """
    Build the clamped Hamiltonian for a base spec.

    The precondition {H <= alpha_bar} subset of B_R is checked analytically via
    the coercivity modulus and then numerically on random (q, y, seed) probes
    with R <= |q| <= 2 R.

    Args:
        base: Base Hamiltonian spec
        alpha_bar: Clamp level
        radius: Radius R
        probes: Probe count (defaults to settings.surgery_probes)
        seed: Master seed for the probe stream

    Returns:
        Surgery HamiltonianSpec

    Raises:
        ConfigurationError: If radius is not positive
        PreconditionViolation: If a probe with |q| >= R has H <= alpha_bar
    """
    if radius <= 0:
        raise ConfigurationError(f"surgery radius must be positive, got {radius}")
    base_h = Hamiltonian(base)
    count = probes or settings.surgery_probes
    rng = np.random.default_rng(seed)
    radii = rng.uniform(radius, 2.0 * radius, size=count)
    radii[0] = radius
    q = radii[:, None] * _random_directions(rng, count, base.dimension)
    env_spec = base.resolved_env_spec
    v = _probe_potentials(env_spec, rng, count, expand_seeds(seed, 8), 64.0 * env_spec.length_scale)
    values = base_h.value(q, v)
    bad = np.flatnonzero(values <= alpha_bar)
    if bad.size:
        i = int(bad[0])
        witness = {"q": q[i].tolist(), "potential": float(v[i]), "value": float(values[i])}
        raise PreconditionViolation(
            f"sublevel set {{H <= {alpha_bar}}} is not contained in B_{radius}", witness=witness
        )
    if base_h.coercivity_modulus(radius) <= alpha_bar:
        logger.warning(
            "surgery_precondition_not_certified",
            alpha_bar=alpha_bar,
            radius=radius,
            coercivity=base_h.coercivity_modulus(radius),
        )
    return HamiltonianSpec(family="surgery", base=base, alpha_bar=alpha_bar, radius=radius)


def make_convexified(base: HamiltonianSpec, radius: float) -> HamiltonianSpec:
    """
    Build the convexified Hamiltonian: tangent extension of G inside B_R.

    Raises:
        ConfigurationError: If R lies below the profile's monotone range
    """
    spec = HamiltonianSpec(family="convexified", base=base, radius=radius)
    Hamiltonian(spec)
    return spec


def convexified_alpha_bar(spec: HamiltonianSpec) -> float:
    """sup over |q| <= R and all y of max(H, H_convexified)."""
    convex = Hamiltonian(spec)
    assert convex.base is not None and convex.radius is not None
    return max(convex.base.bound_above(convex.radius), convex.bound_above(convex.radius))


class SublevelCheckReport(BaseModel):
    """Outcome of a sublevel/superlevel agreement check."""

    alpha: float = Field(..., description="Level compared")
    probes: int = Field(..., description="Number of (q, y) probes")
    disagreements: int = Field(default=0, description="Probes where the indicators differ")
    witnesses: list[dict[str, Any]] = Field(default_factory=list, description="First disagreements")

    @property
    def equal(self) -> bool:
        return self.disagreements == 0


def sublevel_equal_check(
    h1: HamiltonianSpec, h2: HamiltonianSpec, alpha: float, probes: int = 10_000, seed: int = 0
) -> SublevelCheckReport:
    """
    Compare {H1 <= alpha} with {H2 <= alpha} and {H1 >= alpha} with {H2 >= alpha}.

    Probes are drawn uniformly from a ball containing both sublevel sets (with
    margin) and from several environment seeds; both Hamiltonians see the same
    realization when they share an env_spec.
    """
    ham1, ham2 = Hamiltonian(h1), Hamiltonian(h2)
    if ham1.dimension != ham2.dimension:
        raise ConfigurationError("Hamiltonians have different dimensions")
    reach = 1.5 * max(ham1.sublevel_radius(alpha), ham2.sublevel_radius(alpha)) + 1.0
    rng = np.random.default_rng(seed)
    radii = reach * rng.random(probes) ** (1.0 / ham1.dimension)
    q = radii[:, None] * _random_directions(rng, probes, ham1.dimension)
    seeds = expand_seeds(seed, 8)
    env1, env2 = h1.resolved_env_spec, h2.resolved_env_spec
    point_rng_state = rng.bit_generator.state
    v1 = _probe_potentials(env1, rng, probes, seeds, 64.0 * env1.length_scale)
    if env2 == env1:
        v2 = v1
    else:
        rng.bit_generator.state = point_rng_state
        v2 = _probe_potentials(env2, rng, probes, seeds, 64.0 * env1.length_scale)
    a, b = ham1.value(q, v1), ham2.value(q, v2)
    mismatch = ((a <= alpha) != (b <= alpha)) | ((a >= alpha) != (b >= alpha))
    idx = np.flatnonzero(mismatch)
    witnesses = [
        {"q": q[i].tolist(), "h1": float(a[i]), "h2": float(b[i])} for i in idx[:10]
    ]
    report = SublevelCheckReport(alpha=alpha, probes=probes, disagreements=int(idx.size), witnesses=witnesses)
    logger.info("sublevel_check", alpha=alpha, probes=probes, disagreements=report.disagreements)
    return report
