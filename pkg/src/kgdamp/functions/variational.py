# -*- coding: utf-8 -*-
"""
Ground State Functions module.
Part of the kg-damp package.

Radial ground states of ``-Delta Q + c Q = f'(Q)`` by shooting, the threshold level
``m = J^c(Q)``, the potential-well classification of initial data and the global/blowup
probe along the scaling ray ``kappa Q``.
"""

from __future__ import annotations

import logging
import math
import typing

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy import integrate, optimize
from tqdm import trange

from kgdamp.functions import diagnostics, rates, stepper
from kgdamp.functions.grid import DamperProfile, Grid, laplacian, sphere_measure
from kgdamp.support.errors import (
    BracketNotFound,
    HistoryRangeError,
    ModelRangeError,
    NoDecayError,
)
from kgdamp.support.utils.logging_handler import progress_disabled
from kgdamp.support.utils.typing import NdArray

logger = logging.getLogger(__name__)

# where the shot is handed over to the exponential tail, relative to Q(0)
_MATCH_LEVEL = 1e-5
_DECAY_LEVEL = 1e-6


class GroundState(BaseModel):
    """
    Ground state sampled on a grid.

    Attributes
    ----------
    r : np.ndarray
        Grid coordinate (signed on the line).
    Q : np.ndarray
        Profile at the grid nodes.
    c : float
        Mass constant.
    m : float
        Level ``J^c(Q)``, integrated along the shooting trajectory.
    K : float
        ``K^c(Q) = int |Q'|^2 + c Q^2 - Q f'(Q)`` along the trajectory.
    Q0 : float
        Central value.
    residual : float
        Max-norm residual of ``-Delta_h Q + c Q - f'(Q)`` on the free grid nodes.
    r_match : float
        Radius beyond which the exponential tail is used.
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)

    r: NdArray
    Q: NdArray
    c: float
    N: int
    m: float
    K: float
    Q0: float
    residual: float
    r_match: float


class Classification(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    label: typing.Literal["Kplus", "Kminus", "above_threshold"]
    E_value: float
    K_value: float
    m_used: float


# =============================================================================
# SHOOTING
# =============================================================================
def turning_point(model, c: float = 1.0) -> float:
    """
    Smallest positive root ``z*`` of ``c z^2 = 2 f(z)``; the central value exceeds it.

    Raises
    ------
    BracketNotFound
        If ``c z^2 - 2 f(z)`` never changes sign.
    """

    def h(z: float) -> float:
        try:
            return c * z * z - 2.0 * float(model.f(z))
        except ModelRangeError:
            return -math.inf

    lo, hi = 1e-8, 1.0
    if h(lo) <= 0:
        raise BracketNotFound("c z^2 - 2 f(z) is not positive near 0; f is not superquadratic")
    for _ in range(200):
        if h(hi) < 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketNotFound("c z^2 = 2 f(z) has no positive root; f is not superlinear")
    while not math.isfinite(h(hi)):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * hi:
            break
    return float(optimize.brentq(lambda z: max(h(z), -1e300), lo, hi, xtol=1e-15, rtol=1e-15))


class _Shot(typing.NamedTuple):
    outcome: str  # "high", "low" or "open"
    sol: typing.Any
    r0: float
    Q0: float


def _shoot(model, c: float, N: int, Q0: float, r_end: float, rtol: float) -> _Shot:
    """
    Integrate ``Q'' + (N-1)/r Q' = c Q - f'(Q)`` from ``Q(0) = Q0``, ``Q'(0) = 0``.

    Extra components accumulate ``omega r^{N-1}`` times ``Q'^2, Q^2, f(Q), Q f'(Q)``.
    """
    omega = sphere_measure(N)
    s = c * Q0 - float(model.fprime(Q0))
    r0 = 1e-4
    q_start = Q0 + s * r0**2 / (2.0 * N)
    p_start = s * r0 / N
    fq = float(model.f(Q0))
    qf = Q0 * float(model.fprime(Q0))
    y0 = [
        q_start,
        p_start,
        omega * (s / N) ** 2 * r0 ** (N + 2) / (N + 2),
        omega * Q0**2 * r0**N / N,
        omega * fq * r0**N / N,
        omega * qf * r0**N / N,
    ]

    def rhs(r, y):
        Q, P = y[0], y[1]
        fp = float(model.fprime(Q))
        wr = omega * r ** (N - 1)
        return [
            P,
            c * Q - fp - (N - 1) / r * P,
            wr * P * P,
            wr * Q * Q,
            wr * float(model.f(Q)),
            wr * Q * fp,
        ]

    def crossed(r, y):
        return y[0]

    crossed.terminal = True
    crossed.direction = -1

    def turned(r, y):
        return y[1]

    turned.terminal = True
    turned.direction = 1

    try:
        sol = integrate.solve_ivp(
            rhs,
            (r0, r_end),
            y0,
            method="DOP853",
            rtol=rtol,
            atol=1e-14 * max(1.0, Q0),
            events=(crossed, turned),
            dense_output=True,
        )
    except ModelRangeError:
        return _Shot("high", None, r0, Q0)
    if sol.t_events[0].size:
        return _Shot("high", sol, r0, Q0)
    if sol.t_events[1].size:
        return _Shot("low", sol, r0, Q0)
    return _Shot("open", sol, r0, Q0)


def shoot_ground_state(
    model,
    c: float,
    N: int,
    grid: Grid,
    rtol: float = 1e-12,
    max_bisections: int = 200,
    xtol: float = 1e-13,
) -> GroundState:
    """
    Ground state of ``-Delta Q + c Q = f'(Q)`` by shooting on the central value.

    The bracket starts at ``0.999 z*`` (a shot that turns back up) and doubles from
    ``2 z*`` until a shot crosses zero; bisection then narrows the bracket to ``xtol``. The
    last shot that turns back up is followed until ``Q`` drops below ``1e-5 Q(0)``;
    beyond that radius the profile continues with the decaying tail
    ``Q(r_m) (r_m/r)^{(N-1)/2} exp(-sqrt(c) (r - r_m))``.

    Parameters
    ----------
    model : NonlinearityModel or TruncatedModel
        A focusing model with superlinear ``f'``.
    c : float
        Mass constant, > 0.
    N : int
        Dimension.
    grid : Grid
        Output grid; its outer radius is the domain size.
    rtol : float, optional
        Relative tolerance of the ODE integration. Default is 1e-12.
    max_bisections : int, optional
        Bisection cap. Default is 200.
    xtol : float, optional
        Relative bracket width at which the bisection stops. Default is 1e-13.

    Returns
    -------
    GroundState
        Profile on ``grid`` with ``m``, ``K`` and the grid residual.

    Raises
    ------
    ValueError
        For a defocusing model, ``c <= 0`` or a grid with an obstacle.
    BracketNotFound
        If no bracketing pair of shots exists.
    NoDecayError
        If the profile does not decay within the grid.
    """
    if model.sign != "focusing":
        raise ValueError("ground states are computed for focusing models")
    if c <= 0:
        raise ValueError("c must be positive; the critical c=0 case needs a user-supplied m")
    if grid.r_inner > 0:
        raise ValueError("ground states need a grid without obstacle")
    L = grid.L
    z_star = turning_point(model, c)
    logger.debug("shoot_ground_state: turning point z*=%.15g", z_star)

    lo = 0.999 * z_star
    shot_lo = _shoot(model, c, N, lo, L, rtol)
    if shot_lo.outcome != "low":
        raise BracketNotFound(f"lower shot Q0={lo:.6g} does not turn back up")
    hi = 2.0 * z_star
    for _ in range(60):
        shot_hi = _shoot(model, c, N, hi, L, rtol)
        if shot_hi.outcome == "high":
            break
        lo, shot_lo = hi, shot_hi if shot_hi.outcome == "low" else shot_lo
        hi *= 2.0
    else:
        raise BracketNotFound("no shot crossing zero found")

    best = shot_lo
    for _ in trange(
        max_bisections, desc="shooting", leave=False, disable=progress_disabled()
    ):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi or hi - lo <= xtol * hi:
            break
        shot = _shoot(model, c, N, mid, L, rtol)
        if shot.outcome == "high":
            hi = mid
        else:
            lo, best = mid, shot
            if shot.outcome == "open":
                break
    logger.info("shoot_ground_state: Q0=%.15g (bracket width %.2e)", best.Q0, hi - lo)
    return _assemble(model, c, N, grid, best)


def _assemble(model, c: float, N: int, grid: Grid, shot: _Shot) -> GroundState:
    sol = shot.sol
    Q0 = shot.Q0
    ts = sol.t
    Qs = sol.y[0]
    below = np.flatnonzero(Qs <= _MATCH_LEVEL * Q0)
    if below.size:
        i = below[0]
        # refine the handover radius on the dense output
        r_match = optimize.brentq(
            lambda r: sol.sol(r)[0] - _MATCH_LEVEL * Q0, ts[max(i - 1, 0)], ts[i]
        ) if i > 0 else ts[0]
    else:
        raise NoDecayError(
            f"profile still at {Qs.min() / Q0:.2e} Q(0) at r={ts[-1]:.6g}; enlarge L={grid.L}"
        )
    y_m = sol.sol(r_match)
    Q_m = float(y_m[0])
    sqc = math.sqrt(c)
    omega = sphere_measure(N)

    def profile(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inner = r <= r_match
        rr = np.maximum(r[inner], shot.r0)
        out[inner] = sol.sol(rr)[0]
        ro = r[~inner]
        out[~inner] = Q_m * (r_match / ro) ** ((N - 1) / 2.0) * np.exp(-sqc * (ro - r_match))
        return out

    Q_L = float(profile(np.array([grid.L]))[0])
    if abs(Q_L) > _DECAY_LEVEL * Q0:
        raise NoDecayError(f"|Q(L)| = {abs(Q_L):.3e} exceeds {_DECAY_LEVEL:g} Q(0)")

    # tail contributions (leading order)
    tail_mass = omega * r_match ** (N - 1) * Q_m**2 / (2.0 * sqc)
    I_grad = float(y_m[2]) + c * tail_mass
    I_mass = float(y_m[3]) + tail_mass
    I_F = float(y_m[4])
    I_qfp = float(y_m[5])
    m = I_grad + c * I_mass - 2.0 * I_F
    K = I_grad + c * I_mass - I_qfp

    Q = profile(grid.r)
    Q[grid.dirichlet] = 0.0
    res = -laplacian(grid, Q) + c * Q - model.fprime(Q)
    residual = float(np.max(np.abs(res[grid.free])))
    logger.info("ground state: m=%.10g K=%.3e grid residual %.3e", m, K, residual)
    return GroundState(
        r=grid.x.copy(), Q=Q, c=c, N=N, m=m, K=K, Q0=Q0, residual=residual, r_match=r_match
    )


# =============================================================================
# CLASSIFICATION
# =============================================================================
def classify(
    u0: np.ndarray, v0: np.ndarray, grid: Grid, model, m: float
) -> Classification:
    """
    Potential-well label of the data ``(u0, v0)``.

    ``Kplus`` when ``E < m`` and ``K >= 0``, ``Kminus`` when ``E < m`` and ``K < 0``,
    ``above_threshold`` otherwise.
    """
    if model.sign != "focusing":
        raise ValueError("classification is defined for focusing models")
    field = diagnostics.Field(u=u0, v=v0)
    E = diagnostics.total_energy(field, grid, model)
    K = diagnostics.virial_K(field, grid, model)
    if E < m:
        label = "Kplus" if K >= 0 else "Kminus"
    else:
        label = "above_threshold"
    return Classification(label=label, E_value=E, K_value=K, m_used=m)


def dichotomy_probe(
    model,
    grid: Grid,
    damper: DamperProfile,
    kappa_list: typing.Sequence[float],
    scheme: stepper.SchemeConfig,
    T_final: float,
    sample_stride: int = 1,
    ground_state: typing.Optional[GroundState] = None,
    c: float = 1.0,
    fit_window: typing.Optional[typing.Tuple[float, float]] = None,
) -> pd.DataFrame:
    """
    Run ``(kappa Q, 0)`` for every ``kappa`` and compare the outcome with the label.

    Returns
    -------
    pandas.DataFrame
        Columns ``kappa, label, E0, K0, outcome, blowup_time, gamma_fit, consistent``.
        ``outcome`` is ``global`` or ``blowup``; ``consistent`` says whether ``Kplus``
        ran globally and ``Kminus`` blew up (None for data above the threshold).
    """
    if ground_state is None:
        ground_state = shoot_ground_state(model, c, grid.N, grid)
    rows = []
    for kappa in kappa_list:
        u0 = kappa * ground_state.Q
        v0 = np.zeros_like(u0)
        cl = classify(u0, v0, grid, model, ground_state.m)
        hist = stepper.run(
            grid, damper, model, scheme, u0, v0, T_final, sample_stride, progress=False
        )
        outcome = "blowup" if hist.blowup else "global"
        gamma = None
        if outcome == "global":
            try:
                t1, t2 = fit_window if fit_window is not None else (None, None)
                gamma = rates.fit_decay_rate(hist, t1, t2).gamma_fit
            except HistoryRangeError:
                gamma = None
        if cl.label == "Kplus":
            consistent = outcome == "global"
        elif cl.label == "Kminus":
            consistent = outcome == "blowup"
        else:
            consistent = None
        logger.info("dichotomy kappa=%g: %s, %s", kappa, cl.label, outcome)
        rows.append(
            {
                "kappa": kappa,
                "label": cl.label,
                "E0": cl.E_value,
                "K0": cl.K_value,
                "outcome": outcome,
                "blowup_time": hist.blowup_time,
                "gamma_fit": gamma,
                "consistent": consistent,
            }
        )
    return pd.DataFrame(rows)
