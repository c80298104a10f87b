"""
This module provides classes for storing run parameters for the algorithms of the
kg-damp package.
"""

from __future__ import annotations

import typing

from pydantic import BaseModel, ConfigDict, Field

from kgdamp.functions.stepper import SchemeConfig


class BaseRunParams(BaseModel):
    """
    Base class for storing run parameters of kg-damp algorithms.
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)


class SimulationRunParams(BaseRunParams):
    """
    Class for storing the run parameters of a damped NLKG simulation.

    Attributes
    ----------
    scheme : SchemeConfig
        Time step and scheme knobs.
    T_final : float
        Final time.
    sample_stride : int, optional
        Steps between samples, default is 1.
    S_cone : float, optional
        Start of the cone integrals, default ``max(1, 3R)``.
    p_sobolev : float, optional
        Exponent of the weighted Lebesgue term, default ``2 + 4/N``.
    cone_margin : float, optional
        Cone truncation margin, default ``dr/2``.
    chi_R : float, optional
        Cutoff radius of the equipartition residual, default ``R``.
    fit_window : tuple of float, optional
        Window of the decay-rate fit, default ``[0.1 T, T]``.
    m : float, optional
        Potential-well level used to classify focusing data. When None it is obtained by
        shooting the ground state with mass constant ``c``.
    c : float, optional
        Mass constant of the ground state, default is 1.
    progress : bool, optional
        Show a progress bar, default is True.
    """

    scheme: SchemeConfig
    T_final: float
    sample_stride: int = 1
    S_cone: typing.Optional[float] = None
    p_sobolev: typing.Optional[float] = None
    cone_margin: typing.Optional[float] = None
    chi_R: typing.Optional[float] = None
    fit_window: typing.Optional[typing.Tuple[float, float]] = None
    m: typing.Optional[float] = None
    c: float = 1.0
    progress: bool = True


class GroundStateRunParams(BaseRunParams):
    """
    Class for storing the shooting parameters of the ground-state solver.

    Attributes
    ----------
    c : float, optional
        Mass constant, default is 1.
    rtol : float, optional
        Relative ODE tolerance, default is 1e-12.
    max_bisections : int, optional
        Bisection cap, default is 200.
    xtol : float, optional
        Relative bracket width at which bisection stops, default is 1e-13.
    """

    c: float = 1.0
    rtol: float = 1e-12
    max_bisections: int = 200
    xtol: float = 1e-13


class DichotomyRunParams(BaseRunParams):
    """
    Class for storing the parameters of a potential-well dichotomy probe.

    Attributes
    ----------
    scheme : SchemeConfig
        Time step and scheme knobs.
    kappa_list : list of float
        Multiples ``kappa`` of the ground state used as initial data.
    T_final : float
        Final time of every run.
    sample_stride : int, optional
        Steps between samples, default is 1.
    c : float, optional
        Mass constant, default is 1.
    fit_window : tuple of float, optional
        Decay-fit window for the runs that stay global.
    damped : bool, optional
        Use the setup damper when True, ``a = 0`` otherwise. Default is True.
    """

    scheme: SchemeConfig
    kappa_list: typing.List[float] = Field(default_factory=lambda: [0.95, 1.05])
    T_final: float
    sample_stride: int = 1
    c: float = 1.0
    fit_window: typing.Optional[typing.Tuple[float, float]] = None
    damped: bool = True
