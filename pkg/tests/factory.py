from __future__ import annotations

import types
import typing

import numpy as np
import numpy.typing as npt
from kgdamp.algorithms import BaseAlgorithm
from kgdamp.algorithms.data.problem import Problem
from kgdamp.algorithms.data.result import BaseResult
from kgdamp.algorithms.data.run_params import BaseRunParams
from kgdamp.functions.grid import DamperProfile, Grid
from kgdamp.functions.nonlinearity import NonlinearityModel


class FakeRunParams(BaseRunParams):
    """FakeRunParams is a subclass of BaseRunParams."""

    param1: int = 1
    param2: str = "test"


class FakeResult(BaseResult):
    """FakeResult is a subclass of BaseResult."""

    result1: int = 1
    result2: str = "test"


class FakeAlgorithm(BaseAlgorithm[FakeRunParams, FakeResult, Problem]):
    """FakeAlgorithm is a subclass of BaseAlgorithm."""

    RunParamCls = FakeRunParams
    ResultCls = FakeResult

    def run(self) -> FakeResult:
        return FakeResult()


class FakeAlgorithm2(FakeAlgorithm):
    """FakeAlgorithm2 is a subclass of FakeAlgorithm."""


def quartic(sign: str = "defocusing", lam: float = 1.0) -> NonlinearityModel:
    """``f = lam u^4``."""
    return NonlinearityModel(kind="power_sum", coefficients=[(1.0, 4.0)], lam=lam, sign=sign)


def half_quartic_focusing() -> NonlinearityModel:
    """Focusing ``f = u^4/2``, whose ground state for ``c = 1`` on the line is ``sech``."""
    return NonlinearityModel(kind="power_sum", coefficients=[(0.5, 4.0)], sign="focusing")


def gaussian_problem(
    grid: Grid,
    model: typing.Optional[NonlinearityModel] = None,
    damper: typing.Optional[DamperProfile] = None,
    amplitude: float = 1.0,
) -> Problem:
    u0 = amplitude * np.exp(-(grid.x**2))
    return Problem(
        grid=grid,
        damper=damper or DamperProfile(),
        model=model or quartic(),
        u0=u0,
        v0=np.zeros_like(u0),
    )


def synthetic_history(
    t: npt.ArrayLike, E: npt.ArrayLike, A_cum: typing.Optional[npt.ArrayLike] = None
) -> types.SimpleNamespace:
    """Minimal stand-in for a RunHistory carrying only the scalar series."""
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    A = np.zeros_like(t) if A_cum is None else np.asarray(A_cum, dtype=float)
    return types.SimpleNamespace(t=t, E=E, A_cum=A)


def run_config_dict(**overrides: typing.Any) -> typing.Dict[str, typing.Any]:
    """Small, fast N=1 run configuration; nested keys are replaced block-wise."""
    cfg: typing.Dict[str, typing.Any] = {
        "geometry": {"N": 1, "L": 10.0, "dr": 0.1},
        "damper": {"M": 1.0, "R": 2.0, "a0": 1.0, "shape": "smoothstep", "width": 1.0},
        "nonlinearity": {"kind": "power_sum", "coefficients": [[1.0, 4.0]]},
        "mode": "defocusing",
        "initial_data": {"kind": "gaussian", "amplitude": 1.0, "width": 1.0},
        "time": {"dt": 0.05, "T_final": 2.0, "sample_stride": 2},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key] = {**cfg[key], **value}
        else:
            cfg[key] = value
    return cfg
