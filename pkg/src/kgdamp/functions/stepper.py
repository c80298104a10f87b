# -*- coding: utf-8 -*-
"""
Time Integration Functions module.
Part of the kg-damp package.

Energy-conserving implicit scheme for ``u_tt + a u_t - Delta u + u +- f'(u) = 0`` with a
difference-quotient nonlinearity, the explicit leapfrog scheme used for cross-validation,
blowup detection and the time loop that produces a :class:`RunHistory`.
"""

from __future__ import annotations

import collections
import logging
import typing

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg
from tqdm import trange

from kgdamp.functions.grid import DamperProfile, Grid, dirichlet_form, laplacian, laplacian_bands
from kgdamp.support.errors import (
    BlowupDetected,
    GridError,
    NewtonDivergence,
    NumericalInstability,
)
from kgdamp.support.utils.logging_handler import progress_disabled
from kgdamp.support.utils.typing import NdArray

logger = logging.getLogger(__name__)


# =============================================================================
# DATA TYPES
# =============================================================================
class SchemeConfig(BaseModel):
    """
    Time-integration knobs.

    Attributes
    ----------
    dt : float
        Time step.
    scheme : str
        ``conservative`` (implicit, energy-exact) or ``leapfrog_explicit``.
    newton_tol : float
        Relative max-norm tolerance on the Newton update.
    newton_max_iter : int
        Newton iteration cap.
    sv_epsilon : float
        Below this ``|u+ - u-|`` the difference quotient falls back to ``f'`` at the midpoint.
    blowup_threshold : float
        Threshold on ``max|u|``.
    growth_window : int
        Steps over which ``max|u|`` must double to count as finite-time blowup.
    use_sv_quotient : bool
        Replace the difference quotient with ``f'(midpoint)`` when False (mutation hook of
        the check suite).
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)

    dt: float
    scheme: typing.Literal["conservative", "leapfrog_explicit"] = "conservative"
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    sv_epsilon: float = 1e-10
    blowup_threshold: float = 1e6
    growth_window: int = 10
    use_sv_quotient: bool = True

    @model_validator(mode="after")
    def _check_positive(self) -> "SchemeConfig":
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.newton_tol <= 0 or self.newton_max_iter < 1:
            raise ValueError("newton_tol must be positive and newton_max_iter >= 1")
        return self

    def check_cfl(self, grid: Grid) -> None:
        """Raise ``ValueError`` if ``dt`` violates the step restriction of the scheme."""
        limit = 0.9 * grid.dr if self.scheme == "leapfrog_explicit" else grid.dr
        if self.dt > limit * (1.0 + 1e-12):
            raise ValueError(
                f"CFL violation: dt={self.dt} > {limit:g} for scheme {self.scheme}"
            )


class StepState(BaseModel):
    """
    Two consecutive time levels.

    ``u_prev`` is ``u^n`` at time ``t = n dt``, ``u_curr`` is ``u^{n+1}``; ``v`` is the
    velocity at ``t`` (the centered difference, or the initial velocity for ``n = 0``);
    ``A`` is the cumulative damping decrement up to ``t``.
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)

    u_prev: NdArray
    u_curr: NdArray
    v: NdArray
    t: float = 0.0
    A: float = 0.0
    n: int = 0


class RunHistory(BaseModel):
    """
    Sampled output of :func:`run`.

    Attributes
    ----------
    t, E, A_cum, max_u : np.ndarray
        Sample times, staggered discrete energy, cumulative decrement and ``max|u|``.
    u, v : np.ndarray
        Field snapshots, shape ``(n_samples, nodes)``.
    dt : float
        Time step.
    sample_stride : int
        Steps between samples.
    status : str
        ``completed`` or ``blowup``.
    blowup_time : float, optional
        Detection time of a blowup.
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)

    grid: Grid
    damper: DamperProfile
    model: typing.Any
    dt: float
    sample_stride: int
    t: NdArray
    E: NdArray
    A_cum: NdArray
    max_u: NdArray
    u: NdArray
    v: NdArray
    status: typing.Literal["completed", "blowup"] = "completed"
    blowup_time: typing.Optional[float] = None
    blowup_reason: typing.Optional[str] = None
    newton_iterations: int = 0
    messages: typing.List[str] = Field(default_factory=list)

    @property
    def blowup(self) -> bool:
        return self.status == "blowup"

    @property
    def n_samples(self) -> int:
        return int(self.t.size)


# =============================================================================
# SCHEME PIECES
# =============================================================================
def difference_quotient(
    model, up: np.ndarray, um: np.ndarray, eps: float, use_quotient: bool = True
) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    ``D_f(u+, u-)`` and its derivative with respect to ``u+``.

    ``D_f = (f(u+) - f(u-)) / (u+ - u-)``, replaced by ``f'((u+ + u-)/2)`` where
    ``|u+ - u-| <= eps`` (everywhere if ``use_quotient`` is False).
    """
    delta = up - um
    mid = 0.5 * (up + um)
    fp_mid = model.fprime(mid)
    fpp_mid = model.fpp(mid)
    if not use_quotient:
        return fp_mid, 0.5 * fpp_mid
    big = np.abs(delta) > eps
    D = fp_mid.copy()
    dD = 0.5 * fpp_mid
    if np.any(big):
        d = delta[big]
        fu_p = model.f(up[big])
        f_diff = fu_p - model.f(um[big])
        D[big] = f_diff / d
        # derivative of the quotient loses accuracy for small separations
        wide = np.abs(d) > 1e-5 * (1.0 + np.abs(up[big]) + np.abs(um[big]))
        if np.any(wide):
            dw = d[wide]
            dD_big = dD[big]
            dD_big[wide] = (model.fprime(up[big][wide]) * dw - f_diff[wide]) / dw**2
            dD[big] = dD_big
    return D, dD


def initial_state(
    grid: Grid,
    damper: DamperProfile,
    model,
    scheme: SchemeConfig,
    u0: np.ndarray,
    v0: np.ndarray,
) -> StepState:
    """
    Build the first two levels from ``(u0, v0)`` by the Taylor step
    ``u1 = u0 + dt v0 + dt^2/2 (Delta u0 - u0 -+ f'(u0) - a v0)``.
    """
    u0 = grid.apply_dirichlet(grid.check(u0, "u0"))
    v0 = grid.apply_dirichlet(grid.check(v0, "v0"))
    a = damper.values(grid)
    dt = scheme.dt
    acc = laplacian(grid, u0) - u0 - model.sigma * model.fprime(u0) - a * v0
    u1 = grid.apply_dirichlet(u0 + dt * v0 + 0.5 * dt**2 * acc)
    return StepState(u_prev=u0, u_curr=u1, v=v0, t=0.0, A=0.0, n=0)


def reverse_state(state: StepState) -> StepState:
    """Swap the two levels so that stepping runs backwards in time."""
    return StepState(
        u_prev=state.u_curr.copy(),
        u_curr=state.u_prev.copy(),
        v=-state.v,
        t=state.t,
        A=state.A,
        n=state.n,
    )


def discrete_energy(state: StepState, grid: Grid, model, dt: float) -> float:
    """
    Staggered discrete energy ``E^{n+1/2}`` of the two levels held in ``state``.

    ``sum w [((u+ - u0)/dt)^2 + (u+^2 + u0^2)/2 +- (f(u+) + f(u0))]`` plus the averaged
    Dirichlet form ``(B(u+, u+) + B(u0, u0))/2``; the sign of the ``f`` term follows the
    model's mode.
    """
    u0 = state.u_prev
    up = state.u_curr
    w = grid.weights
    kinetic = np.dot(w, ((up - u0) / dt) ** 2)
    grad = 0.5 * (dirichlet_form(grid, up) + dirichlet_form(grid, u0))
    mass = 0.5 * np.dot(w, up**2 + u0**2)
    pot = model.sigma * np.dot(w, model.f(up) + model.f(u0))
    return float(kinetic + grad + mass + pot)


class _Stepper:
    """Holds the per-run constants of the implicit solve."""

    def __init__(self, grid: Grid, damper: DamperProfile, model, scheme: SchemeConfig):
        self.grid = grid
        self.model = model
        self.scheme = scheme
        self.a = damper.values(grid)
        self.free = np.flatnonzero(grid.free)
        lower, diag, upper = laplacian_bands(grid)
        idx = self.free
        self.L_diag = diag[idx]
        self.L_upper = upper[idx[:-1]]
        self.L_lower = lower[idx[:-1]]
        self.iterations = 0

    def _residual(self, c, u0, um, lap_um):
        dt = self.scheme.dt
        lap_c = laplacian(self.grid, c)
        D, dD = difference_quotient(
            self.model, c, um, self.scheme.sv_epsilon, self.scheme.use_sv_quotient
        )
        res = (
            (c - 2.0 * u0 + um) / dt**2
            + self.a * (c - um) / (2.0 * dt)
            - 0.5 * (lap_c + lap_um)
            + 0.5 * (c + um)
            + self.model.sigma * D
        )
        return res, dD

    def implicit(self, state: StepState) -> np.ndarray:
        grid, dt = self.grid, self.scheme.dt
        u0, um = state.u_curr, state.u_prev
        lap_um = laplacian(grid, um)
        c = grid.apply_dirichlet(2.0 * u0 - um)
        idx = self.free
        base_diag = 1.0 / dt**2 + self.a[idx] / (2.0 * dt) + 0.5 - 0.5 * self.L_diag
        ab = np.zeros((3, idx.size))
        ab[0, 1:] = -0.5 * self.L_upper
        ab[2, :-1] = -0.5 * self.L_lower
        tol = self.scheme.newton_tol
        res = None
        for it in range(1, self.scheme.newton_max_iter + 1):
            res, dD = self._residual(c, u0, um, lap_um)
            if not np.all(np.isfinite(res[idx])):
                break
            ab[1] = base_diag + self.model.sigma * dD[idx]
            try:
                delta = linalg.solve_banded((1, 1), ab, -res[idx])
            except (linalg.LinAlgError, ValueError):
                break
            c[idx] += delta
            self.iterations += 1
            scale = 1.0 + np.max(np.abs(c))
            if np.max(np.abs(delta)) <= tol * scale:
                logger.debug("newton converged in %d iterations at t=%g", it, state.t)
                return c
            if not np.all(np.isfinite(c)):
                break
        if res is None or not np.all(np.isfinite(res)):
            node = int(np.argmax(~np.isfinite(c))) if not np.all(np.isfinite(c)) else 0
            raise NewtonDivergence(node, float("inf"), state.t + 2.0 * dt)
        res, _ = self._residual(c, u0, um, lap_um)
        node = int(idx[np.argmax(np.abs(res[idx]))])
        raise NewtonDivergence(node, float(abs(res[node])), state.t + 2.0 * dt)

    def leapfrog(self, state: StepState) -> np.ndarray:
        dt = self.scheme.dt
        u0, um = state.u_curr, state.u_prev
        half = 0.5 * dt * self.a
        acc = laplacian(self.grid, u0) - u0 - self.model.sigma * self.model.fprime(u0)
        up = (2.0 * u0 - um + dt**2 * acc + half * um) / (1.0 + half)
        return self.grid.apply_dirichlet(up)

    def advance(self, state: StepState) -> StepState:
        if self.scheme.scheme == "leapfrog_explicit":
            up = self.leapfrog(state)
        else:
            up = self.implicit(state)
        dt = self.scheme.dt
        vbar = (up - state.u_prev) / (2.0 * dt)
        dA = dt * float(np.dot(self.grid.weights, self.a * vbar**2))
        return StepState(
            u_prev=state.u_curr,
            u_curr=up,
            v=vbar,
            t=(state.n + 1) * dt,
            A=state.A + dA,
            n=state.n + 1,
        )


def step(
    state: StepState,
    grid: Grid,
    damper: DamperProfile,
    model,
    scheme: SchemeConfig,
) -> StepState:
    """
    Advance ``state`` by one time step.

    Parameters
    ----------
    state : StepState
        Current levels ``(u^n, u^{n+1})``.
    grid : Grid
        Spatial grid.
    damper : DamperProfile
        Damping coefficient.
    model : NonlinearityModel or TruncatedModel
        Nonlinearity with its sign mode.
    scheme : SchemeConfig
        Time-integration knobs.

    Returns
    -------
    StepState
        Levels ``(u^{n+1}, u^{n+2})`` with the decrement accumulated.

    Raises
    ------
    NewtonDivergence
        If the implicit solve fails.
    BlowupDetected
        If ``max|u^{n+2}|`` exceeds ``scheme.blowup_threshold``.
    """
    if state.u_curr.shape != (grid.nodes,):
        raise GridError("state is not sized to the grid")
    new = _Stepper(grid, damper, model, scheme).advance(state)
    peak = float(np.max(np.abs(new.u_curr)))
    if not np.isfinite(peak) or peak > scheme.blowup_threshold:
        raise BlowupDetected(new.t + scheme.dt, peak, "threshold")
    return new


# =============================================================================
# TIME LOOP
# =============================================================================
def run(
    grid: Grid,
    damper: DamperProfile,
    model,
    scheme: SchemeConfig,
    u0: np.ndarray,
    v0: np.ndarray,
    T_final: float,
    sample_stride: int = 1,
    progress: bool = True,
) -> RunHistory:
    """
    Integrate from ``t = 0`` to ``T_final``, sampling every ``sample_stride`` steps.

    A blowup ends the run early; the partial history is returned with
    ``status="blowup"`` and ``blowup_time`` set.

    Parameters
    ----------
    grid, damper, model, scheme
        Problem definition.
    u0, v0 : np.ndarray
        Initial data.
    T_final : float
        Final time, >= 0.
    sample_stride : int, optional
        Steps between samples. Default is 1.
    progress : bool, optional
        Show a tqdm progress bar. Default is True.

    Returns
    -------
    RunHistory
        Samples at ``t = k * sample_stride * dt``,
        ``floor(T_final / (dt * sample_stride)) + 1`` of them for a completed run.

    Raises
    ------
    NewtonDivergence
        If the implicit solve fails without the finite-time growth signature.
    NumericalInstability
        If ``max|u|`` crosses the threshold with slow growth.
    """
    if T_final < 0:
        raise ValueError("T_final must be nonnegative")
    if sample_stride < 1:
        raise ValueError("sample_stride must be >= 1")
    scheme.check_cfl(grid)
    dt = scheme.dt
    n_steps = int(np.floor(T_final / dt + 1e-9))
    if sample_stride * dt > 0.1 + 1e-12:
        logger.warning(
            "sample_stride*dt = %g exceeds 0.1; cone integrals lose accuracy",
            sample_stride * dt,
        )

    stepper = _Stepper(grid, damper, model, scheme)
    state = initial_state(grid, damper, model, scheme, u0, v0)

    ts, Es, As, peaks, us, vs = [], [], [], [], [], []
    window = collections.deque(maxlen=scheme.growth_window + 1)
    status = "completed"
    blowup_time = None
    reason = None
    messages: typing.List[str] = []

    def _record(s: StepState) -> None:
        ts.append(s.t)
        Es.append(discrete_energy(s, grid, model, dt))
        As.append(s.A)
        peaks.append(float(np.max(np.abs(s.u_prev))))
        us.append(s.u_prev.copy())
        vs.append(s.v.copy())

    window.append(float(np.max(np.abs(state.u_curr))))
    _record(state)
    logger.info(
        "run: %d steps of dt=%g (%s), %d nodes, stride %d",
        n_steps,
        dt,
        scheme.scheme,
        grid.nodes,
        sample_stride,
    )
    for n in trange(
        n_steps, desc="time stepping", disable=(not progress) or progress_disabled()
    ):
        try:
            state = stepper.advance(state)
        except NewtonDivergence as exc:
            if _fast_growth(window):
                status, blowup_time, reason = "blowup", exc.t, "newton failure under growth"
                messages.append(str(exc))
                break
            raise
        peak = float(np.max(np.abs(state.u_curr)))
        window.append(peak)
        if not np.isfinite(peak) or peak > scheme.blowup_threshold:
            if not np.isfinite(peak) or _fast_growth(window):
                status, blowup_time, reason = "blowup", state.t + dt, "threshold"
                break
            raise NumericalInstability(
                f"max|u|={peak:.3e} exceeds {scheme.blowup_threshold:g} at t={state.t + dt:.6g} "
                "without finite-time growth"
            )
        if (n + 1) % sample_stride == 0:
            _record(state)

    if status == "blowup":
        logger.warning("run: blowup detected at t=%.6g (%s)", blowup_time, reason)
    else:
        logger.info("run: completed, E(0)=%.6g, E(T)=%.6g", Es[0], Es[-1])

    return RunHistory(
        grid=grid,
        damper=damper,
        model=model,
        dt=dt,
        sample_stride=sample_stride,
        t=np.asarray(ts),
        E=np.asarray(Es),
        A_cum=np.asarray(As),
        max_u=np.asarray(peaks),
        u=np.asarray(us),
        v=np.asarray(vs),
        status=status,
        blowup_time=blowup_time,
        blowup_reason=reason,
        newton_iterations=stepper.iterations,
        messages=messages,
    )


def _fast_growth(window: typing.Deque[float]) -> bool:
    """True when ``max|u|`` has at least doubled across the window."""
    if len(window) < 2:
        return False
    latest = window[-1]
    oldest = window[0]
    return (not np.isfinite(latest)) or (oldest > 0 and latest >= 2.0 * oldest)
