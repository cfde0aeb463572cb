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
Random environment specification.

An EnvSpec describes the law of a stationary potential V(y, omega); a seed picks
one realization of it (see ``homogenization_lab.env``).
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

EnvFamily = Literal["periodic_cosine", "random_checkerboard", "random_fourier", "poisson_bumps"]

# Families whose raw field is discontinuous and must be mollified.
MOLLIFIED_FAMILIES = ("random_checkerboard", "poisson_bumps")

# Families evaluated from lazily generated window data.
WINDOWED_FAMILIES = ("random_checkerboard", "poisson_bumps")


class EnvSpec(BaseModel):
    """
    Parametric description of a stationary random potential.

    Attributes:
        family: Potential family
        dimension: Spatial dimension (1 or 2)
        amplitude: Bound on |V|; 0 gives the constant-coefficient case V = 0
        length_scale: Cell size (checkerboard), period (cosine), correlation
            length (Fourier) or bump diameter (Poisson)
        smoothing_radius: Mollification width, required for discontinuous families
        mode_count: Number of Fourier modes (random_fourier only)
        bump_intensity: Expected bump centres per unit volume (poisson_bumps only)
        randomize: Randomize cell offsets and Fourier phases; disabling it pins a
            one-signed d_1 V(0) for every seed (negative-control fixtures)
        window_limit: Largest |y| (sup norm) a windowed realization will evaluate
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: EnvFamily = Field(..., description="Potential family")
    dimension: int = Field(default=1, description="Spatial dimension", ge=1, le=2)
    amplitude: float = Field(default=1.0, description="Bound on |V|", ge=0.0)
    length_scale: float = Field(default=1.0, description="Cell size / period / correlation length", gt=0.0)
    smoothing_radius: float = Field(
        default=0.0, description="Mollification radius for discontinuous families", ge=0.0
    )
    mode_count: int = Field(default=16, description="Fourier modes (random_fourier)", ge=1)
    bump_intensity: float = Field(
        default=1.0, description="Bump centres per unit volume (poisson_bumps)", gt=0.0
    )
    randomize: bool = Field(
        default=True, description="Randomize offsets/phases (disable only for fixtures)"
    )
    window_limit: float = Field(
        default=10_000.0, description="Largest sup-norm |y| evaluated by windowed families", gt=0.0
    )

    @model_validator(mode="after")
    def validate_smoothing(self) -> "EnvSpec":
        """
        Require a positive mollification radius for discontinuous families.

        Raises:
            ValueError: If a checkerboard or Poisson family has smoothing_radius == 0
        """
        if self.family in MOLLIFIED_FAMILIES and self.amplitude > 0 and self.smoothing_radius <= 0:
            raise ValueError(
                f"smoothing_radius must be > 0 for family '{self.family}' "
                "(the raw field is discontinuous)"
            )
        return self

    @property
    def is_deterministic(self) -> bool:
        """True when every seed produces the same potential."""
        return self.amplitude == 0 or self.family == "periodic_cosine"

    @property
    def is_windowed(self) -> bool:
        """True when realizations evaluate from lazily generated window data."""
        return self.family in WINDOWED_FAMILIES
