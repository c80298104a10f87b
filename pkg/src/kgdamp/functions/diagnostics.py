# -*- coding: utf-8 -*-
"""
Run Diagnostics Functions module.
Part of the kg-damp package.

Energies, damping decrement, virial functionals, Morawetz light-cone integrals, the
weighted space-time Lebesgue ratio and the equipartition identity, evaluated on fields
and on :class:`~kgdamp.functions.stepper.RunHistory` objects.
"""

from __future__ import annotations

import logging
import typing

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy import integrate as sp_integrate

from kgdamp.functions.grid import (
    DamperProfile,
    Grid,
    cutoff_chi,
    dirichlet_form,
    integrate,
)
from kgdamp.functions.stepper import RunHistory
from kgdamp.support.errors import HistoryRangeError
from kgdamp.support.utils.typing import NdArray

logger = logging.getLogger(__name__)

RECORD_COLUMNS = [
    "t",
    "E",
    "E_F",
    "A_cum",
    "K",
    "J",
    "pair_vu",
    "max_u",
    "l2_u",
    "mor_grad",
    "mor_g",
    "mor_damp",
    "ws_lhs",
]


class Field(BaseModel):
    """Field ``(u, v)`` at time ``t``."""

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)

    u: NdArray
    v: NdArray
    t: float = 0.0


# =============================================================================
# FIELD FUNCTIONALS
# =============================================================================
def total_energy(field: Field, grid: Grid, model) -> float:
    """
    Total energy ``int v^2 + |grad u|^2 + u^2 +- 2 f(u)``.

    The gradient term is the discrete Dirichlet form, the same one used by the stepper's
    energy; the sign of the ``f`` term is negative for focusing models.
    """
    u = grid.check(field.u, "u")
    v = grid.check(field.v, "v")
    return float(
        integrate(grid, v**2 + u**2 + 2.0 * model.sigma * model.f(u))
        + dirichlet_form(grid, u)
    )


def free_energy(field: Field, grid: Grid) -> float:
    """Free energy ``int v^2 + |grad u|^2 + u^2``; always nonnegative."""
    u = grid.check(field.u, "u")
    v = grid.check(field.v, "v")
    return float(integrate(grid, v**2 + u**2) + dirichlet_form(grid, u))


def virial_K(field: Field, grid: Grid, model) -> float:
    """``K(u) = int |grad u|^2 + u^2 +- u f'(u)`` (minus sign when focusing)."""
    u = grid.check(field.u, "u")
    return float(
        dirichlet_form(grid, u) + integrate(grid, u**2 + model.sigma * u * model.fprime(u))
    )


def static_J(field_u: np.ndarray, grid: Grid, model) -> float:
    """
    Static action ``J(u) = int |grad u|^2 + u^2 - 2 int f(u)``.

    Raises
    ------
    ValueError
        For a defocusing model.
    """
    if model.sign != "focusing":
        raise ValueError("static_J is defined for focusing models")
    u = grid.check(field_u, "u")
    return float(dirichlet_form(grid, u) + integrate(grid, u**2 - 2.0 * model.f(u)))


def mu_ratio(A: float, E0: float, M: float, T: float, a0: float, R: float) -> float:
    """
    ``[M T + (a0 R)^{-1}] A / E0``.

    Raises
    ------
    ValueError
        If ``E0`` is zero or ``a0 R`` vanishes.
    """
    if E0 == 0:
        raise ValueError("mu_ratio needs a nonzero initial energy E0")
    if a0 * R == 0:
        raise ValueError("mu_ratio needs a0 > 0 and R > 0")
    return (M * T + 1.0 / (a0 * R)) * A / E0


# =============================================================================
# MORAWETZ WEIGHTS
# =============================================================================
def morawetz_lambda(t, r):
    """``lambda = sqrt(t^2 + |x|^2)``."""
    return np.sqrt(np.asarray(t, dtype=float) ** 2 + np.asarray(r, dtype=float) ** 2)


def morawetz_q(t, r, N: int):
    """``q = (N-1)/(2 lambda) + (t^2 - |x|^2)/lambda^3``."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    lam = morawetz_lambda(t, r)
    return (N - 1) / (2.0 * lam) + (t**2 - r**2) / lam**3


def _cone_mask(grid: Grid, t: np.ndarray, margin: typing.Optional[float]) -> np.ndarray:
    margin = 0.5 * grid.dr if margin is None else margin
    return grid.r[None, :] < (np.asarray(t)[:, None] - margin)


def _window(history: RunHistory, S: float, T: float) -> np.ndarray:
    t = history.t
    tol = 1e-9 * max(1.0, abs(T))
    if not (1.0 <= S < T) or T > t[-1] + tol:
        raise HistoryRangeError(
            f"need 1 <= S < T <= {t[-1]:g} for cone integrals, got S={S}, T={T}"
        )
    sel = np.flatnonzero((t >= S - tol) & (t <= T + tol))
    if sel.size < 2:
        raise HistoryRangeError(f"fewer than two samples in [{S}, {T}]")
    return sel


def _morawetz_integrands(
    history: RunHistory,
    grid: Grid,
    damper: DamperProfile,
    model,
    sel: np.ndarray,
    cone_margin: typing.Optional[float],
) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    t = history.t[sel]
    u = history.u[sel]
    v = history.v[sel]
    x = grid.x[None, :]
    r = grid.r[None, :]
    tt = t[:, None]
    ur = np.gradient(u, grid.x, axis=1, edge_order=2)
    lam = morawetz_lambda(tt, r)
    q = morawetz_q(tt, r, grid.N)
    mask = _cone_mask(grid, t, cone_margin)
    a = damper.values(grid)[None, :]

    grad_term = (x * v + tt * ur) ** 2 / lam**3
    g_term = model.sigma * model.g(u) * q
    multiplier = (-tt * v + x * ur) / lam + u * q
    damp_term = a * v * multiplier
    w = grid.weights
    grad_s = (np.where(mask, grad_term, 0.0)) @ w
    g_s = (np.where(mask, g_term, 0.0)) @ w
    damp_s = (np.where(mask, damp_term, 0.0)) @ w
    return t, grad_s, g_s, damp_s


def morawetz_accumulate(
    history: RunHistory,
    grid: Grid,
    damper: DamperProfile,
    model,
    S: float,
    T: float,
    cone_margin: typing.Optional[float] = None,
) -> typing.Tuple[float, float, float]:
    """
    Light-cone Morawetz integrals over ``{|x| < t, S < t < T}``.

    Parameters
    ----------
    history : RunHistory
        The run.
    grid, damper, model
        Problem definition of the run.
    S, T : float
        Time window, ``1 <= S < T`` within the history.
    cone_margin : float, optional
        Nodes with ``|x| < t - cone_margin`` count as inside the cone. Default ``dr/2``.

    Returns
    -------
    term_grad : float
        ``int int |x v + t grad u|^2 / lambda^3``; nonnegative.
    term_g : float
        ``int int +-g(u) q``.
    term_damp : float
        ``int int a v m(u)``.

    Raises
    ------
    HistoryRangeError
        If the window is invalid or holds fewer than two samples.
    """
    sel = _window(history, S, T)
    t, grad_s, g_s, damp_s = _morawetz_integrands(history, grid, damper, model, sel, cone_margin)
    return (
        float(sp_integrate.trapezoid(grad_s, t)),
        float(sp_integrate.trapezoid(g_s, t)),
        float(sp_integrate.trapezoid(damp_s, t)),
    )


def _check_p(p: float, N: int) -> None:
    lo = 2.0 + 4.0 / N
    if p < lo - 1e-12:
        raise ValueError(f"p below 2+4/N = {lo:g}, got p={p}")
    if N > 2 and p > 2.0 * N / (N - 2) + 1e-12:
        raise ValueError(f"p above 2N/(N-2) = {2.0 * N / (N - 2):g}, got p={p}")


def weighted_sobolev_lhs(
    history: RunHistory,
    grid: Grid,
    S: float,
    T: float,
    p: float,
    cone_margin: typing.Optional[float] = None,
) -> float:
    """``int int_{|x|<t, S<t<T} |u|^p / t``."""
    sel = _window(history, S, T)
    t = history.t[sel]
    mask = _cone_mask(grid, t, cone_margin)
    vals = np.where(mask, np.abs(history.u[sel]) ** p, 0.0) @ grid.weights / t
    return float(sp_integrate.trapezoid(vals, t))


def weighted_sobolev_ratio(
    history: RunHistory,
    grid: Grid,
    S: float,
    T: float,
    p: float,
    E0: float,
    cone_margin: typing.Optional[float] = None,
) -> float:
    """
    ``LHS / (E0^{p/2-1} (E0 + term_grad))`` with ``LHS = int int_cone |u|^p / t``.

    Raises
    ------
    ValueError
        If ``p`` is outside ``[2+4/N, 2N/(N-2)]`` or ``E0 <= 0``.
    """
    _check_p(p, grid.N)
    if E0 <= 0:
        raise ValueError("weighted_sobolev_ratio needs E0 > 0")
    lhs = weighted_sobolev_lhs(history, grid, S, T, p, cone_margin)
    term_grad, _, _ = morawetz_accumulate(
        history, grid, history.damper, history.model, S, T, cone_margin
    )
    return lhs / (E0 ** (p / 2.0 - 1.0) * (E0 + term_grad))


# =============================================================================
# DECREMENT
# =============================================================================
def _check_T(history: RunHistory, T: float) -> None:
    if T < 0 or T > history.t[-1] + 1e-9 * max(1.0, abs(T)):
        raise HistoryRangeError(f"T={T} outside the history [0, {history.t[-1]:g}]")


def decrement(history: RunHistory, T: float) -> float:
    """
    Damping decrement ``A(T) = int_0^T int a v^2``.

    Reads the stepper's exact accumulation, linearly interpolated between samples, so
    ``E(T) - E(0) + 2 A(T)`` vanishes to roundoff at sample times.

    Raises
    ------
    HistoryRangeError
        If ``T`` lies outside the history.
    """
    _check_T(history, T)
    return float(np.interp(T, history.t, history.A_cum))


def damping_power(history: RunHistory) -> np.ndarray:
    """``int a v^2`` at every sample."""
    a = history.damper.values(history.grid)
    return (history.v**2 * a[None, :]) @ history.grid.weights


def decrement_quadrature(history: RunHistory, T: float) -> float:
    """Time-trapezoid of ``int a v^2`` over the stored samples up to ``T``."""
    _check_T(history, T)
    power = damping_power(history)
    t = history.t
    keep = t < T
    ts = np.append(t[keep], T)
    ps = np.append(power[keep], np.interp(T, t, power))
    if ts.size < 2:
        return 0.0
    return float(sp_integrate.trapezoid(ps, ts))


# =============================================================================
# EQUIPARTITION
# =============================================================================
def equipartition_residual(
    history: RunHistory,
    grid: Grid,
    damper: DamperProfile,
    model,
    chi_R: float,
) -> pd.DataFrame:
    """
    Residual of the localized equipartition identity at interior sample times.

    ``d/dt <v|chi u> = int chi (v^2 - |grad u|^2 - u^2 -+ u f'(u)) - int (a v chi u + u grad u . grad chi)``
    with the time derivative by centered differences of the samples, ``chi`` the smoothstep
    cutoff on ``[chi_R, 2 chi_R]``. The column ``residual_full`` is the ``chi = 1`` variant
    ``d/dt <v|u> = ||v||^2 - K(u) - <a v|u>``.

    Returns
    -------
    pandas.DataFrame
        Columns ``t, residual, residual_full``.
    """
    if history.n_samples < 3:
        return pd.DataFrame({"t": [], "residual": [], "residual_full": []})
    t = history.t
    u = history.u
    v = history.v
    w = grid.weights
    a = damper.values(grid)[None, :]
    chi, dchi = cutoff_chi(grid, chi_R)
    ur = np.gradient(u, grid.x, axis=1, edge_order=2)
    sig = model.sigma
    ufp = u * model.fprime(u)

    pair_chi = (v * chi * u) @ w
    rhs_chi = (chi * (v**2 - ur**2 - u**2 - sig * ufp)) @ w - (a * v * chi * u + u * ur * dchi) @ w
    pair = (v * u) @ w
    grad_sq = (np.diff(u, axis=1) ** 2) @ grid.kappa
    K = grad_sq + (u**2 + sig * ufp) @ w
    rhs_full = (v**2) @ w - K - (a * v * u) @ w

    d_chi = np.gradient(pair_chi, t)
    d_full = np.gradient(pair, t)
    inner = slice(1, -1)
    return pd.DataFrame(
        {
            "t": t[inner],
            "residual": (d_chi - rhs_chi)[inner],
            "residual_full": (d_full - rhs_full)[inner],
        }
    )


# =============================================================================
# SERIES
# =============================================================================
def field_series(history: RunHistory) -> pd.DataFrame:
    """Per-sample field functionals ``E_F, K, J, pair_vu, l2_u`` from the snapshots."""
    grid = history.grid
    model = history.model
    w = grid.weights
    u = history.u
    v = history.v
    grad_sq = (np.diff(u, axis=1) ** 2) @ grid.kappa
    mass = (u**2) @ w
    sig = model.sigma
    return pd.DataFrame(
        {
            "t": history.t,
            "E_F": (v**2) @ w + grad_sq + mass,
            "K": grad_sq + mass + sig * (u * model.fprime(u)) @ w,
            "J": grad_sq + mass + 2.0 * sig * model.f(u) @ w,
            "pair_vu": (v * u) @ w,
            "l2_u": np.sqrt(mass),
        }
    )


def records(
    history: RunHistory,
    S: typing.Optional[float] = None,
    p: typing.Optional[float] = None,
    cone_margin: typing.Optional[float] = None,
) -> pd.DataFrame:
    """
    One diagnostics record per sample time.

    Parameters
    ----------
    history : RunHistory
        The run.
    S : float, optional
        Start of the cone integrals. Default ``max(1, 3R)``.
    p : float, optional
        Exponent of the weighted Lebesgue term. Default ``2 + 4/N``.
    cone_margin : float, optional
        Cone truncation margin. Default ``dr/2``.

    Returns
    -------
    pandas.DataFrame
        Columns in the order of ``RECORD_COLUMNS``. The Morawetz and ``ws_lhs`` columns are
        running integrals from ``S`` (zero before ``S``).
    """
    grid = history.grid
    S = max(1.0, 3.0 * history.damper.R) if S is None else S
    p = 2.0 + 4.0 / grid.N if p is None else p
    df = field_series(history)
    df["E"] = history.E
    df["A_cum"] = history.A_cum
    df["max_u"] = history.max_u
    n = history.n_samples
    mor = np.zeros((4, n))
    t = history.t
    sel = np.flatnonzero(t >= S - 1e-9 * max(1.0, S))
    if sel.size >= 2:
        ts, grad_s, g_s, damp_s = _morawetz_integrands(
            history, grid, history.damper, history.model, sel, cone_margin
        )
        mask = _cone_mask(grid, ts, cone_margin)
        ws = np.where(mask, np.abs(history.u[sel]) ** p, 0.0) @ grid.weights / ts
        for row, series in enumerate((grad_s, g_s, damp_s, ws)):
            mor[row, sel] = sp_integrate.cumulative_trapezoid(series, ts, initial=0.0)
    df["mor_grad"], df["mor_g"], df["mor_damp"], df["ws_lhs"] = mor
    return df[RECORD_COLUMNS]


def ratio_series(
    recs: pd.DataFrame, damper: DamperProfile, N: int, p: typing.Optional[float] = None
) -> pd.DataFrame:
    """
    ``mu_ratio`` and ``weighted_sobolev_ratio`` at every record time.

    Parameters
    ----------
    recs : pandas.DataFrame
        Output of :func:`records`; ``T`` runs over its sample times.
    damper : DamperProfile
        Damper of the run.
    N : int
        Dimension.
    p : float, optional
        Exponent used for ``ws_lhs``. Default ``2 + 4/N``.

    Returns
    -------
    pandas.DataFrame
        Columns ``t, mu, sobolev_ratio``. A column is NaN where its ratio is undefined
        (no damping for ``mu``, ``E0 <= 0`` for both).
    """
    p = 2.0 + 4.0 / N if p is None else p
    _check_p(p, N)
    t = recs["t"].to_numpy()
    E0 = float(recs["E"].iloc[0])
    mu = np.full_like(t, np.nan)
    sob = np.full_like(t, np.nan)
    if E0 > 0 and damper.a0 * damper.R > 0:
        mu = (damper.M * t + 1.0 / (damper.a0 * damper.R)) * recs["A_cum"].to_numpy() / E0
    if E0 > 0:
        sob = recs["ws_lhs"].to_numpy() / (
            E0 ** (p / 2.0 - 1.0) * (E0 + recs["mor_grad"].to_numpy())
        )
    return pd.DataFrame({"t": t, "mu": mu, "sobolev_ratio": sob})


def nu_ratio(history: RunHistory) -> pd.DataFrame:
    """
    ``K(u) / ||u||_{H^1}^2`` per sample (0 where ``u`` vanishes).

    Inside the potential well this stays bounded below by a positive constant.
    """
    fs = field_series(history)
    h1 = fs["E_F"].to_numpy() - (history.v**2) @ history.grid.weights
    ratio = np.where(h1 > 0, fs["K"] / np.where(h1 > 0, h1, 1.0), 0.0)
    return pd.DataFrame({"t": history.t, "nu": ratio})


def free_energy_bound_residual(
    history: RunHistory, m: typing.Optional[float] = None
) -> pd.DataFrame:
    """
    ``(N+2) E - N K - 2 E_F`` per sample, with ``E`` from the snapshot fields.

    The column ``applies`` marks samples with ``K >= 0`` (and ``E < m`` when ``m`` is
    given), where the focusing free-energy bound ``2 E_F <= (N+2) E`` is expected.
    """
    fs = field_series(history)
    N = history.grid.N
    E = fs["J"] + (history.v**2) @ history.grid.weights
    residual = (N + 2) * E - N * fs["K"] - 2.0 * fs["E_F"]
    applies = fs["K"] >= 0
    if m is not None:
        applies = applies & (E < m)
    return pd.DataFrame(
        {"t": history.t, "E": E, "K": fs["K"], "E_F": fs["E_F"], "residual": residual, "applies": applies}
    )


def exp_subcritical_gate(field: Field, grid: Grid, model, m: float) -> bool:
    """
    ``||grad u||^2 + ||v||^2 <= E < m <= 1`` for the initial data of a 2D exponential run.
    """
    E = total_energy(field, grid, model)
    kinetic_grad = dirichlet_form(grid, field.u) + integrate(grid, np.asarray(field.v) ** 2)
    ok = bool(kinetic_grad <= E + 1e-12 * max(1.0, abs(E)) and E < m <= 1.0)
    if not ok:
        logger.warning(
            "subcritical exponential gate fails: |grad u|^2+|v|^2=%.6g, E=%.6g, m=%.6g",
            kinetic_grad,
            E,
            m,
        )
    return ok
