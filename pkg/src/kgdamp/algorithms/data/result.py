"""
This module provides classes for handling and storing the results of the kg-damp
algorithms.
"""

from __future__ import annotations

import typing

import pandas as pd
from pydantic import BaseModel, ConfigDict

from kgdamp.functions.rates import RateFit
from kgdamp.functions.stepper import RunHistory
from kgdamp.functions.variational import Classification, GroundState


class BaseResult(BaseModel):
    """
    Base class for storing results data.
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)


class RunSummary(BaseModel):
    """
    Scalar summary of one run.

    ``classification`` carries the potential-well label of the initial data and is set
    only in focusing mode; :meth:`to_json_dict` drops the key otherwise. So does
    ``exp_subcritical``, the initial-data gate of focusing ``exp2d`` runs, when it was
    not evaluated. ``mu_ratio_*`` and ``sobolev_ratio_*`` are the final and maximal
    values over the samples (None where the ratio is undefined).
    """

    model_config = ConfigDict(from_attributes=True)

    E0: float
    E_final: float
    gamma_fit: typing.Optional[float] = None
    r_squared: typing.Optional[float] = None
    blowup: bool = False
    blowup_time: typing.Optional[float] = None
    status: str = "completed"
    mode: typing.Literal["defocusing", "focusing"] = "defocusing"
    classification: typing.Optional[str] = None
    exp_subcritical: typing.Optional[bool] = None
    mor_grad: float = 0.0
    mor_g: float = 0.0
    mor_damp: float = 0.0
    mu_ratio_final: typing.Optional[float] = None
    mu_ratio_max: typing.Optional[float] = None
    sobolev_ratio_final: typing.Optional[float] = None
    sobolev_ratio_max: typing.Optional[float] = None
    n_samples: int = 0

    def to_json_dict(self) -> typing.Dict[str, typing.Any]:
        data = self.model_dump(mode="json")
        if self.mode != "focusing":
            data.pop("classification")
        if self.exp_subcritical is None:
            data.pop("exp_subcritical")
        return data


class SimulationResult(BaseResult):
    """
    Class for storing the result of a simulation.

    Attributes
    ----------
    history : RunHistory
        Sampled fields and energies.
    records : pandas.DataFrame
        One diagnostics record per sample.
    fit : RateFit, optional
        Decay-rate fit, None for blowups and short runs.
    classification : Classification, optional
        Potential-well label of the initial data (focusing mode only).
    equipartition : pandas.DataFrame
        Residuals of the localized and global equipartition identities.
    summary : RunSummary
        Scalar summary.
    """

    history: RunHistory
    records: pd.DataFrame
    fit: typing.Optional[RateFit] = None
    classification: typing.Optional[Classification] = None
    equipartition: typing.Optional[pd.DataFrame] = None
    summary: RunSummary


class GroundStateResult(BaseResult):
    """
    Class for storing a ground state.

    Attributes
    ----------
    ground_state : GroundState
        Profile, level ``m`` and virial value.
    turning_point : float
        Zero ``z*`` of ``c z^2 / 2 - f(z)``, the lower end of the shooting bracket.
    """

    ground_state: GroundState
    turning_point: float


class DichotomyResult(BaseResult):
    """
    Class for storing the outcome of a dichotomy probe.

    Attributes
    ----------
    table : pandas.DataFrame
        One row per ``kappa`` (label, energy, virial value, outcome, fitted rate).
    ground_state : GroundState
        The ground state the data were built from.
    """

    table: pd.DataFrame
    ground_state: GroundState

    @property
    def all_consistent(self) -> bool:
        flags = self.table["consistent"].dropna()
        return bool(flags.astype(bool).all())
