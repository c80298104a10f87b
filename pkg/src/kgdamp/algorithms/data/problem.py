"""
Problem definition handed by a setup to its algorithms.
"""

from __future__ import annotations

import typing

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from kgdamp.functions.grid import DamperProfile, Grid
from kgdamp.support.utils.typing import NdArray


class Problem(BaseModel):
    """
    Grid, damper, nonlinearity and initial data of one damped NLKG problem.

    Attributes
    ----------
    grid : Grid
        Spatial discretization.
    damper : DamperProfile
        Damping coefficient ``a``.
    model : NonlinearityModel or TruncatedModel
        Nonlinear energy density with its sign mode.
    u0, v0 : np.ndarray
        Initial position and velocity on the grid nodes.
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)

    grid: Grid
    damper: DamperProfile
    model: typing.Any
    u0: NdArray
    v0: NdArray

    @model_validator(mode="after")
    def _check_shapes(self) -> "Problem":
        self.u0 = self.grid.apply_dirichlet(self.grid.check(self.u0, "u0"))
        self.v0 = self.grid.apply_dirichlet(self.grid.check(self.v0, "v0"))
        return self

    @property
    def mode(self) -> str:
        return self.model.sign

    def with_initial_data(self, u0: np.ndarray, v0: np.ndarray) -> "Problem":
        return Problem(grid=self.grid, damper=self.damper, model=self.model, u0=u0, v0=v0)
