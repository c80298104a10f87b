# -*- coding: utf-8 -*-
"""
Decay Rate Functions module.
Part of the kg-damp package.

Closed-form decay-rate bounds and the empirical extraction of the realized rate from a
run history.
"""

from __future__ import annotations

import itertools
import logging
import math
import typing

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import stats

from kgdamp.functions.stepper import RunHistory
from kgdamp.support.errors import HistoryRangeError

logger = logging.getLogger(__name__)


class RateInputs(BaseModel):
    """
    Constants of the theoretical rate.

    ``regime`` selects which of the optional fields are required: ``condition_f2`` needs
    ``q_growth`` and ``E0``; ``focusing`` needs ``nu``, ``C_script_N``, ``epsilon`` and
    ``E0``.
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)

    M: float
    R: float
    a0: float
    C0: float
    C_star: float = 1.0
    N: int = 1
    regime: typing.Literal["condition_f", "condition_f2", "focusing"] = "condition_f"
    q_growth: typing.Optional[float] = None
    E0: typing.Optional[float] = None
    nu: typing.Optional[float] = None
    C_script_N: typing.Optional[float] = None
    epsilon: typing.Optional[float] = None

    @model_validator(mode="after")
    def _check_regime(self) -> "RateInputs":
        if min(self.M, self.R, self.a0, self.C_star) <= 0 or self.C0 < 0:
            raise ValueError("M, R, a0 and C_star must be positive, C0 nonnegative")
        required = {
            "condition_f": [],
            "condition_f2": ["q_growth", "E0"],
            "focusing": ["nu", "C_script_N", "epsilon", "E0"],
        }[self.regime]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"regime {self.regime} needs {', '.join(missing)}")
        return self


class RateResult(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    T: float
    delta: float
    gamma: float
    regime: str


class RateFit(BaseModel):
    """Least-squares fit of ``log E`` against ``t`` on ``[t1, t2]``."""

    model_config = ConfigDict(from_attributes=True)

    gamma_fit: float
    intercept: float
    r_squared: float
    t1: float
    t2: float


# =============================================================================
# THEORY
# =============================================================================
def theoretical_rate(inputs: RateInputs) -> RateResult:
    """
    ``(T, delta, gamma)`` with ``gamma = log(1 + delta) / T``.

    ``log T`` is ``C_*(1 + C0 + R^2)`` for ``condition_f``,
    ``C_*(1 + C0 + C0 E0^{q/2-1} + R^2)`` for ``condition_f2`` and
    ``C_* nu^{-1} (1 + C(N)) (1 + C0 + R^2)`` for ``focusing``;
    ``delta = [1 + M T + (a0 R)^{-1}]^{-1} / 2``, capped by ``(M T)^{-1} epsilon / E0`` in
    the focusing regime. All dimension-dependent factors are folded into ``C_*``.
    """
    M, R, a0, C0, Cs = inputs.M, inputs.R, inputs.a0, inputs.C0, inputs.C_star
    if inputs.regime == "condition_f":
        log_T = Cs * (1.0 + C0 + R**2)
    elif inputs.regime == "condition_f2":
        log_T = Cs * (1.0 + C0 + C0 * inputs.E0 ** (inputs.q_growth / 2.0 - 1.0) + R**2)
    else:
        log_T = Cs / inputs.nu * (1.0 + inputs.C_script_N) * (1.0 + C0 + R**2)
    try:
        T = math.exp(log_T)
    except OverflowError:
        T = math.inf
    delta = 0.5 / (1.0 + M * T + 1.0 / (a0 * R))
    if inputs.regime == "focusing":
        delta = min(delta, inputs.epsilon / (M * T * inputs.E0))
    gamma = math.log1p(delta) / T
    return RateResult(T=T, delta=delta, gamma=gamma, regime=inputs.regime)


def rate_lattice(
    base: RateInputs, values: typing.Sequence[float] = (1.0, 2.0, 3.0)
) -> pd.DataFrame:
    """Theoretical ``gamma`` over the ``(M, R, C0)`` lattice ``values^3``."""
    rows = []
    for M, R, C0 in itertools.product(values, repeat=3):
        inputs = base.model_copy(update={"M": M, "R": R, "C0": C0})
        res = theoretical_rate(inputs)
        rows.append({"M": M, "R": R, "C0": C0, "T": res.T, "delta": res.delta, "gamma": res.gamma})
    return pd.DataFrame(rows)


def lattice_is_monotone(lattice: pd.DataFrame) -> bool:
    """True when ``gamma`` is positive and strictly decreasing along every lattice axis."""
    if not (lattice["gamma"] > 0).all():
        return False
    for axis in ("M", "R", "C0"):
        others = [c for c in ("M", "R", "C0") if c != axis]
        for _, grp in lattice.groupby(others):
            g = grp.sort_values(axis)["gamma"].to_numpy()
            if np.any(np.diff(g) >= 0):
                return False
    return True


# =============================================================================
# FITS AND GATES
# =============================================================================
def fit_decay_rate(
    history: RunHistory, t1: typing.Optional[float] = None, t2: typing.Optional[float] = None
) -> RateFit:
    """
    Fit ``log E(t) = intercept - gamma_fit t`` on the samples in ``[t1, t2]``.

    Parameters
    ----------
    history : RunHistory
        Any object with ``t`` and ``E`` arrays.
    t1, t2 : float, optional
        Fit window. Defaults to ``[0.1 t_end, t_end]``.

    Returns
    -------
    RateFit
        The fitted rate. A constant series gives ``gamma_fit = 0`` and ``r_squared = 1``.

    Raises
    ------
    HistoryRangeError
        If the window has fewer than 10 samples or a nonpositive energy.
    """
    t = np.asarray(history.t, dtype=float)
    E = np.asarray(history.E, dtype=float)
    t_end = float(t[-1])
    t1 = 0.1 * t_end if t1 is None else t1
    t2 = t_end if t2 is None else t2
    if not t1 < t2:
        raise HistoryRangeError(f"empty fit window [{t1}, {t2}]")
    tol = 1e-9 * max(1.0, abs(t2))
    sel = (t >= t1 - tol) & (t <= t2 + tol)
    if sel.sum() < 10:
        raise HistoryRangeError(
            f"window too short: {int(sel.sum())} samples in [{t1}, {t2}], need 10"
        )
    ts, Es = t[sel], E[sel]
    if np.any(Es <= 0):
        raise HistoryRangeError("nonpositive energy samples in the fit window")
    logE = np.log(Es)
    if np.ptp(logE) == 0.0:
        return RateFit(gamma_fit=0.0, intercept=float(logE[0]), r_squared=1.0, t1=t1, t2=t2)
    res = stats.linregress(ts, logE)
    r2 = float(min(max(res.rvalue**2, 0.0), 1.0))
    logger.debug("fit_decay_rate: gamma=%.6g r2=%.6f on [%g, %g]", -res.slope, r2, t1, t2)
    return RateFit(
        gamma_fit=float(-res.slope), intercept=float(res.intercept), r_squared=r2, t1=t1, t2=t2
    )


def _at(history: RunHistory, arr: np.ndarray, time: float) -> float:
    return float(np.interp(time, history.t, arr))


def decrement_gate(history: RunHistory, T: float, delta: float, start: float = 0.0) -> bool:
    """
    ``A(start, start + T) >= delta E(start + T)``, the gate behind the iteration
    ``E(t + T) <= E(t) - delta E(t + T)``.

    Raises
    ------
    HistoryRangeError
        If ``[start, start + T]`` leaves the history.
    """
    end = start + T
    if T <= 0 or start < 0 or end > history.t[-1] + 1e-9 * max(1.0, end):
        raise HistoryRangeError(f"window [{start}, {end}] outside the history")
    dA = _at(history, history.A_cum, end) - _at(history, history.A_cum, start)
    return bool(dA >= delta * _at(history, history.E, end))


def gate_iteration_bound(
    history: RunHistory, T: float, delta: float, tol: float = 1e-9
) -> pd.DataFrame:
    """
    Gate outcome on every window ``[kT, (k+1)T]`` and the iterated bound
    ``E((k+1)T) <= (1+delta)^{-(k+1)} E(0)``.

    Columns: ``k, t_end, gate, E, bound, holds``. ``holds`` is checked only while every
    gate so far has held (None afterwards).
    """
    if T <= 0:
        raise HistoryRangeError("window length must be positive")
    E0 = float(history.E[0])
    n_win = int(np.floor(history.t[-1] / T + 1e-9))
    rows = []
    all_gates = True
    for k in range(n_win):
        gate = decrement_gate(history, T, delta, start=k * T)
        all_gates = all_gates and gate
        E_end = _at(history, history.E, (k + 1) * T)
        bound = (1.0 + delta) ** (-(k + 1)) * E0
        holds = bool(E_end <= bound + tol * (1.0 + E0)) if all_gates else None
        rows.append(
            {"k": k, "t_end": (k + 1) * T, "gate": gate, "E": E_end, "bound": bound, "holds": holds}
        )
    return pd.DataFrame(rows, columns=["k", "t_end", "gate", "E", "bound", "holds"])
