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
Hamiltonian specification.

Base families are additive in the potential, H(p, y) = G(|p|) + V(y) + constant:

    eikonal      G(r) = r
    quadratic    G(r) = r^2
    double_well  G(r) = (r^2 - 1)^2

Modified families nest a base spec:

    surgery      clamp at alpha_bar inside B_R, |p|^2 - R^2 + alpha_bar outside
    convexified  tangent-line extension of G inside B_R (convex, equal to H outside)
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from homogenization_lab.models.environment import EnvSpec

HamiltonianFamily = Literal["eikonal", "quadratic", "double_well", "surgery", "convexified"]

BASE_FAMILIES = ("eikonal", "quadratic", "double_well")
MODIFIED_FAMILIES = ("surgery", "convexified")


class HamiltonianSpec(BaseModel):
    """
    Parametric Hamiltonian H(p, y, omega).

    Attributes:
        family: Hamiltonian family
        env_spec: Environment law (base families only; modified families inherit it)
        base: Base spec (surgery and convexified only)
        alpha_bar: Clamp level (surgery only)
        radius: Radius R of the modified ball (surgery and convexified)
        constant: Additive constant
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: HamiltonianFamily = Field(..., description="Hamiltonian family")
    env_spec: EnvSpec | None = Field(default=None, description="Environment law")
    base: "HamiltonianSpec | None" = Field(default=None, description="Base spec for modified families")
    alpha_bar: float | None = Field(default=None, description="Clamp level for surgery")
    radius: float | None = Field(default=None, description="Radius R of the modified ball", gt=0.0)
    constant: float = Field(default=0.0, description="Additive constant")

    @model_validator(mode="after")
    def validate_structure(self) -> "HamiltonianSpec":
        """
        Validate which fields each family requires.

        Raises:
            ValueError: If a required field is missing or a forbidden one is set
        """
        if self.family in BASE_FAMILIES:
            if self.env_spec is None:
                raise ValueError(f"family '{self.family}' requires env_spec")
            if self.base is not None:
                raise ValueError(f"family '{self.family}' does not take a base spec")
            return self

        if self.base is None:
            raise ValueError(f"family '{self.family}' requires a base spec")
        if self.env_spec is not None and self.env_spec != self.base.resolved_env_spec:
            raise ValueError("modified families inherit env_spec from their base")
        if self.radius is None:
            raise ValueError(f"family '{self.family}' requires radius")
        if self.family == "surgery" and self.alpha_bar is None:
            raise ValueError("family 'surgery' requires alpha_bar")
        if self.family == "convexified" and self.base.family not in BASE_FAMILIES:
            raise ValueError("family 'convexified' requires a base family")
        return self

    @property
    def resolved_env_spec(self) -> EnvSpec:
        """Environment law, inherited through nested base specs."""
        if self.env_spec is not None:
            return self.env_spec
        assert self.base is not None
        return self.base.resolved_env_spec

    @property
    def dimension(self) -> int:
        """Spatial dimension of the environment."""
        return self.resolved_env_spec.dimension
