# -*- coding: utf-8 -*-
"""
Nonlinear Energy Density Functions module.
Part of the kg-damp package.

Evaluators for the nonlinear energy density ``f`` and its derived quantities
(``f'``, ``f''``, ``g = u f' - 2 f``, ``V = f/u^2``, ``V'``), the coercivity constant
of the defocusing condition, and the two-stage truncation ``V -> V_k -> V_kl``.
"""

from __future__ import annotations

import logging
import math
import typing

import numpy as np
import numpy.typing as npt
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from kgdamp.support.errors import ConditionViolation, ModelRangeError, QuadratureError

logger = logging.getLogger(__name__)

ArrayLike = typing.Union[float, npt.ArrayLike]

# exp() of anything above this overflows float64
_EXP_LIMIT = 700.0
# truncation tables stop where the exponent reaches this share of the limit
_TABLE_HEADROOM = 0.5
_FOUR_PI = 4.0 * math.pi


# =============================================================================
# MODELS
# =============================================================================
class NonlinearityModel(BaseModel):
    """
    Nonlinear energy density ``f`` with its sign mode and growth constants.

    Attributes
    ----------
    kind : str
        One of ``none``, ``power_sum``, ``exponential_power``, ``exp2d``,
        ``log_perturbed`` and ``custom``.
    coefficients : list of (float, float)
        Pairs ``(lambda_i, p_i)`` of ``f = sum lambda_i |u|^p_i`` (``power_sum``).
    lam, mu, nu, alpha : float
        Overall factor of every kind; ``f = lam exp(mu |u|^nu) |u|^(2+alpha)`` for
        ``exponential_power``.
    sign : str
        ``defocusing`` (``+f'`` in the equation, ``+2f`` in the energy) or
        ``focusing`` (both with a minus sign).
    C0 : float, optional
        Coercivity constant ``f <= C0 (u^2 + g)`` if known.
    q_growth : float, optional
        Exponent of the weaker growth condition ``f <= C0 (u^2 + |u|^q + g)``.
    custom_f, custom_fprime, custom_fpp : callable, optional
        Vectorized closures for ``kind="custom"``. ``custom_fpp`` falls back to a
        central difference of ``custom_fprime``.
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)

    kind: typing.Literal[
        "none", "power_sum", "exponential_power", "exp2d", "log_perturbed", "custom"
    ] = "none"
    coefficients: typing.List[typing.Tuple[float, float]] = Field(default_factory=list)
    lam: float = 1.0
    mu: float = 0.0
    nu: float = 0.0
    alpha: float = 0.0
    sign: typing.Literal["defocusing", "focusing"] = "defocusing"
    C0: typing.Optional[float] = None
    q_growth: typing.Optional[float] = None
    custom_f: typing.Optional[typing.Callable] = Field(default=None, exclude=True)
    custom_fprime: typing.Optional[typing.Callable] = Field(default=None, exclude=True)
    custom_fpp: typing.Optional[typing.Callable] = Field(default=None, exclude=True)

    @model_validator(mode="after")
    def _check_kind(self) -> "NonlinearityModel":
        if self.kind == "power_sum":
            if not self.coefficients:
                raise ValueError("power_sum needs at least one (lambda, p) pair")
            for lam_i, p_i in self.coefficients:
                if lam_i <= 0 or p_i <= 2:
                    raise ValueError(
                        f"power_sum term ({lam_i}, {p_i}): need lambda > 0 and p > 2"
                    )
        if self.kind == "exponential_power" and min(
            self.lam, self.mu, self.nu, self.alpha
        ) < 0:
            raise ValueError("exponential_power needs lam, mu, nu, alpha >= 0")
        if self.kind == "custom" and (self.custom_f is None or self.custom_fprime is None):
            raise ValueError("custom kind needs custom_f and custom_fprime")
        if self.C0 is not None and self.C0 < 0:
            raise ValueError("C0 must be nonnegative")
        if self.q_growth is not None and self.q_growth < 2:
            raise ValueError("q_growth must be >= 2")
        return self

    @property
    def sigma(self) -> float:
        """+1 for defocusing, -1 for focusing."""
        return 1.0 if self.sign == "defocusing" else -1.0

    # -------------------------------------------------------------------------
    def f(self, u: ArrayLike) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        s = np.abs(u)
        if self.kind == "none":
            return np.zeros_like(s)
        if self.kind == "power_sum":
            return self.lam * sum(lam_i * s**p_i for lam_i, p_i in self.coefficients)
        if self.kind == "exponential_power":
            ex = self._exp_guard(self.mu * s**self.nu, u)
            return self.lam * ex * s ** (2.0 + self.alpha)
        if self.kind == "exp2d":
            w = _FOUR_PI * s**2
            self._exp_guard(w, u)
            return self.lam * _exp_tail(w, order=3)
        if self.kind == "log_perturbed":
            return self.lam * s**2 * np.log1p(s**2)
        return np.asarray(self.custom_f(u), dtype=float)

    def fprime(self, u: ArrayLike) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        s = np.abs(u)
        if self.kind == "none":
            return np.zeros_like(s)
        if self.kind == "power_sum":
            return self.lam * sum(
                lam_i * p_i * s ** (p_i - 2.0) * u for lam_i, p_i in self.coefficients
            )
        if self.kind == "exponential_power":
            a, m, n = self.alpha, self.mu, self.nu
            ex = self._exp_guard(m * s**n, u)
            return self.lam * ex * s**a * u * ((2.0 + a) + m * n * s**n)
        if self.kind == "exp2d":
            w = _FOUR_PI * s**2
            self._exp_guard(w, u)
            return self.lam * 2.0 * _FOUR_PI * u * _exp_tail(w, order=2)
        if self.kind == "log_perturbed":
            u2 = u**2
            return self.lam * (2.0 * u * np.log1p(u2) + 2.0 * u**3 / (1.0 + u2))
        return np.asarray(self.custom_fprime(u), dtype=float)

    def fpp(self, u: ArrayLike) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        s = np.abs(u)
        if self.kind == "none":
            return np.zeros_like(s)
        if self.kind == "power_sum":
            return self.lam * sum(
                lam_i * p_i * (p_i - 1.0) * s ** (p_i - 2.0) for lam_i, p_i in self.coefficients
            )
        if self.kind == "exponential_power":
            a, m, n = self.alpha, self.mu, self.nu
            ex = self._exp_guard(m * s**n, u)
            return (
                self.lam
                * ex
                * (
                    (2.0 + a) * (1.0 + a) * s**a
                    + m * n * (3.0 + 2.0 * a + n) * s ** (a + n)
                    + (m * n) ** 2 * s ** (a + 2.0 * n)
                )
            )
        if self.kind == "exp2d":
            w = _FOUR_PI * s**2
            self._exp_guard(w, u)
            return self.lam * (
                2.0 * _FOUR_PI * _exp_tail(w, order=2) + 4.0 * _FOUR_PI * w * np.expm1(w)
            )
        if self.kind == "log_perturbed":
            u2 = u**2
            return self.lam * (
                2.0 * np.log1p(u2) + 4.0 * u2 / (1.0 + u2) + (6.0 * u2 + 2.0 * u2**2) / (1.0 + u2) ** 2
            )
        if self.custom_fpp is not None:
            return np.asarray(self.custom_fpp(u), dtype=float)
        h = 1e-5 * (1.0 + s)
        return (self.fprime(u + h) - self.fprime(u - h)) / (2.0 * h)

    def g(self, u: ArrayLike) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return u * self.fprime(u) - 2.0 * self.f(u)

    def V(self, u: ArrayLike) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        u2 = u**2
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(u2 > 0, self.f(u) / np.where(u2 > 0, u2, 1.0), 0.0)
        return out

    def Vprime(self, u: ArrayLike) -> np.ndarray:
        # V' = g / u^3
        u = np.asarray(u, dtype=float)
        u3 = u**3
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(u3 != 0, self.g(u) / np.where(u3 != 0, u3, 1.0), 0.0)
        return out

    def magnitude_limit(self, headroom: float = 1.0) -> float:
        """
        Largest ``|u|`` whose exponential factor stays below ``headroom * 700``.

        ``inf`` for every kind without an exponential factor.
        """
        cap = headroom * _EXP_LIMIT
        if self.kind == "exponential_power" and self.mu > 0 and self.nu > 0:
            return float((cap / self.mu) ** (1.0 / self.nu))
        if self.kind == "exp2d":
            return math.sqrt(cap / _FOUR_PI)
        return math.inf

    # -------------------------------------------------------------------------
    @staticmethod
    def _exp_guard(exponent: np.ndarray, u: np.ndarray) -> np.ndarray:
        exponent = np.asarray(exponent)
        bad = exponent > _EXP_LIMIT
        if np.any(bad):
            raise ModelRangeError(np.asarray(u)[bad].flat[0], kind="exponential")
        return np.exp(exponent)


def _exp_tail(w: np.ndarray, order: int) -> np.ndarray:
    """
    ``exp(w) - sum_{j<order} w^j/j!`` without cancellation for small ``w``.
    """
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    small = w < 0.5
    # series
    ws = w[small]
    term = ws**order / math.factorial(order)
    acc = term.copy()
    for j in range(order + 1, order + 25):
        term = term * ws / j
        acc = acc + term
    out[small] = acc
    wl = w[~small]
    direct = np.expm1(wl)
    for j in range(1, order):
        direct = direct - wl**j / math.factorial(j)
    out[~small] = direct
    return out


# =============================================================================
# EVALUATORS
# =============================================================================
def eval_f(model, u: ArrayLike) -> typing.Union[float, np.ndarray]:
    """
    Nonlinear energy density ``f(u)``.

    Parameters
    ----------
    model : NonlinearityModel or TruncatedModel
        The model to evaluate.
    u : float or array_like
        Sample point(s).

    Returns
    -------
    float or np.ndarray
        ``f(u)``; a float when ``u`` is a scalar.

    Raises
    ------
    ModelRangeError
        If an exponential kind overflows.
    """
    return _scalarize(model.f(u), u)


def eval_fprime(model, u: ArrayLike) -> typing.Union[float, np.ndarray]:
    """``f'(u)``, odd in ``u``."""
    return _scalarize(model.fprime(u), u)


def eval_fpp(model, u: ArrayLike) -> typing.Union[float, np.ndarray]:
    return _scalarize(model.fpp(u), u)


def eval_g(model, u: ArrayLike) -> typing.Union[float, np.ndarray]:
    """``g(u) = u f'(u) - 2 f(u)``; nonnegative for defocusing models."""
    return _scalarize(model.g(u), u)


def eval_V(model, u: ArrayLike) -> typing.Union[float, np.ndarray]:
    return _scalarize(model.V(u), u)


def eval_Vprime(model, u: ArrayLike) -> typing.Union[float, np.ndarray]:
    return _scalarize(model.Vprime(u), u)


def _scalarize(value: np.ndarray, u: ArrayLike):
    if np.ndim(u) == 0:
        return float(np.asarray(value))
    return value


# -----------------------------------------------------------------------------


def estimate_C0(
    model: NonlinearityModel,
    sample_range: typing.Tuple[float, float] = (-10.0, 10.0),
    n_samples: int = 20001,
    q: typing.Optional[float] = None,
) -> float:
    """
    Estimate the coercivity constant ``C0`` by dense sampling.

    Computes ``sup f(u) / (u^2 + g(u))`` over ``n_samples`` equispaced points of
    ``sample_range`` (``0/0`` counts as 0). When ``q`` is given the denominator
    gains ``|u|^q`` (the weaker growth condition).

    Parameters
    ----------
    model : NonlinearityModel
        A defocusing model.
    sample_range : tuple of float, optional
        Sampling interval. Default is (-10, 10).
    n_samples : int, optional
        Number of samples. Default is 20001.
    q : float, optional
        Growth exponent of the weaker condition. Default is None.

    Returns
    -------
    float
        The sampled supremum.

    Raises
    ------
    ValueError
        If the model is focusing.
    ConditionViolation
        If ``g < 0`` at any sample; the exception lists the violating samples.
    """
    if model.sign != "defocusing":
        raise ValueError("estimate_C0 requires a defocusing model")
    u = np.linspace(sample_range[0], sample_range[1], int(n_samples))
    fu = model.f(u)
    gu = model.g(u)
    tol = 1e-12 * (1.0 + np.abs(u * model.fprime(u)))
    bad = gu < -tol
    if np.any(bad):
        raise ConditionViolation(u[bad])
    den = u**2 + np.maximum(gu, 0.0)
    if q is not None:
        den = den + np.abs(u) ** q
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, fu / np.where(den > 0, den, 1.0), 0.0)
    c0 = float(np.max(ratio)) if ratio.size else 0.0
    logger.debug("estimate_C0: sup ratio %.6g on %s", c0, sample_range)
    return c0


def estimate_C0_f2(
    model: NonlinearityModel,
    q: float,
    sample_range: typing.Tuple[float, float] = (-10.0, 10.0),
    n_samples: int = 20001,
) -> float:
    """``sup f / (u^2 + |u|^q + g)``, the constant of the weaker growth condition."""
    return estimate_C0(model, sample_range=sample_range, n_samples=n_samples, q=q)


# =============================================================================
# TRUNCATION
# =============================================================================
class TruncatedModel:
    """
    Truncated nonlinearity ``f_k`` (first stage) or ``f_kl`` (second stage).

    For ``|z| <= k`` the base model is used verbatim. Beyond ``k`` the first stage
    caps the growth of ``z V'(z)`` at ``k V'(k) |z/k|^theta``; ``V_k`` is obtained by
    adaptive quadrature of ``V_k'`` and tabulated on a logarithmic grid; between nodes
    ``V_k`` is a cubic Hermite spline on the exact slopes. For exponential kinds the
    table stops where the base model is still finite; past its end the capped branch
    ``P(k) |z/k|^theta`` is continued in closed form. The second stage continues ``V_k``
    beyond ``l`` with the pure power ``z V_kl'(z) = l V_k'(l) |z/l|^theta`` (integrated
    in closed form).

    The instance exposes the evaluator interface of :class:`NonlinearityModel`
    (``f``, ``fprime``, ``fpp``, ``g``, ``V``, ``Vprime``, ``sign``, ``sigma``), so a
    truncated equation can be time-stepped like any other model.

    Attributes
    ----------
    base : NonlinearityModel
        The model being truncated.
    theta : float
        Growth exponent in (0, 1).
    k : float
        First-stage radius.
    l : float or None
        Second-stage radius (None for a first-stage model).
    identity : bool
        True when the cap is never active, i.e. ``f_k = f``.
    table : pandas.DataFrame
        Columns ``z, Vprime, V, f, fprime`` of the first-stage table.
    """

    def __init__(
        self,
        base: NonlinearityModel,
        theta: float,
        k: float,
        l: typing.Optional[float] = None,  # noqa: E741
        z_max: typing.Optional[float] = None,
        points_per_decade: int = 2048,
        _table: typing.Optional[dict] = None,
    ):
        self.base = base
        self.theta = float(theta)
        self.k = float(k)
        self.l = None if l is None else float(l)
        self.points_per_decade = int(points_per_decade)
        reach = base.magnitude_limit(_TABLE_HEADROOM)
        if reach <= self.k:
            raise ValueError(
                f"k={self.k} lies beyond the evaluable range |z| <= {reach:.6g} of the "
                f"{base.kind} model"
            )
        z_max = float(z_max) if z_max is not None else 1e3 * max(self.k, self.l or 0.0)
        if z_max > reach:
            logger.debug("truncation table ends at z=%.6g, the range of %s", reach, base.kind)
            z_max = reach
        self.z_max = z_max
        if _table is None:
            _table = self._tabulate()
        self._z = _table["z"]
        self._P = _table["P"]  # z V_k'(z)
        self._Vk = _table["Vk"]
        self.identity = bool(_table["identity"])
        self._P_int = PchipInterpolator(self._z, self._P, extrapolate=False)
        self._V_int = CubicHermiteSpline(
            self._z, self._Vk, self._P / self._z, extrapolate=False
        )
        self._dP_int = self._P_int.derivative()
        if self.l is not None:
            self._Vl = float(self._Vk_eval(np.array([self.l]))[0])
            self._Pl = float(self._P_eval(np.array([self.l]))[0])

    # -------------------------------------------------------------------------
    @property
    def sign(self) -> str:
        return self.base.sign

    @property
    def sigma(self) -> float:
        return self.base.sigma

    @property
    def table(self) -> pd.DataFrame:
        z = self._z
        Vk = self._Vk
        P = self._P
        return pd.DataFrame(
            {"z": z, "Vprime": P / z, "V": Vk, "f": Vk * z**2, "fprime": z * (P + 2.0 * Vk)}
        )

    def _tabulate(self) -> dict:
        k, theta = self.k, self.theta
        n_dec = max(np.log10(self.z_max / k), 1.0 / self.points_per_decade)
        n = int(np.ceil(n_dec * self.points_per_decade)) + 1
        z = np.geomspace(k, self.z_max, n)
        base = self.base
        Pk = float(k * base.Vprime(k))
        cap = Pk * (z / k) ** theta
        zVp = z * base.Vprime(z)
        P = np.minimum(zVp, cap)
        identity = bool(np.all(zVp <= cap * (1.0 + 1e-12) + 1e-300))
        if identity:
            logger.info("truncate_first: cap inactive beyond k=%g, f_k = f", k)
            return {"z": z, "P": zVp, "Vk": base.V(z), "identity": True}

        def vk_prime(y: float) -> float:
            yv = float(base.Vprime(y))
            return min(yv, Pk * (y / k) ** theta / y)

        increments = np.empty(n - 1)
        for i in range(n - 1):
            a, b = z[i], z[i + 1]
            val, err = integrate.quad(vk_prime, a, b, epsabs=0.0, epsrel=1e-13, limit=100)
            if not np.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300):
                raise QuadratureError((a, b), f"estimated error {err:.2e}")
            increments[i] = val
        Vk = float(base.V(k)) + np.concatenate(([0.0], np.cumsum(increments)))
        return {"z": z, "P": P, "Vk": Vk, "identity": False}

    def _cap_active_at_end(self) -> bool:
        return bool(self._P[-1] < self.z_max * float(self.base.Vprime(self.z_max)))

    def _P_eval(self, s: np.ndarray) -> np.ndarray:
        # first-stage z V_k'(z) for s >= k
        out = np.empty_like(s)
        inside = s <= self.z_max
        out[inside] = self._P_int(s[inside])
        far = ~inside
        if np.any(far):
            if self._cap_active_at_end():
                out[far] = self._P[-1] * (s[far] / self.z_max) ** self.theta
            else:
                out[far] = s[far] * self.base.Vprime(s[far])
        return out

    def _Vk_eval(self, s: np.ndarray) -> np.ndarray:
        out = np.empty_like(s)
        inside = s <= self.z_max
        out[inside] = self._V_int(s[inside])
        far = ~inside
        if np.any(far):
            if self._cap_active_at_end():
                c = self._P[-1] * self.z_max ** (-self.theta)
                out[far] = self._Vk[-1] + c * (s[far] ** self.theta - self.z_max**self.theta) / self.theta
            else:
                out[far] = self._Vk[-1] + self.base.V(s[far]) - float(self.base.V(self.z_max))
        return out

    def _dP_eval(self, s: np.ndarray) -> np.ndarray:
        out = np.empty_like(s)
        inside = s <= self.z_max
        out[inside] = self._dP_int(s[inside])
        far = ~inside
        if np.any(far):
            # P ~ c s^theta beyond the table
            P_far = self._P_eval(s[far])
            out[far] = self.theta * P_far / s[far]
        return out

    def _parts(self, u: ArrayLike) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return (s, P=sV'(s), V(s), dP/ds) for s = |u| beyond k."""
        s = np.abs(np.asarray(u, dtype=float))
        P = np.empty_like(s)
        Vs = np.empty_like(s)
        dP = np.empty_like(s)
        l = self.l  # noqa: E741
        first = s if l is None else np.minimum(s, l)
        P[:] = self._P_eval(first)
        Vs[:] = self._Vk_eval(first)
        dP[:] = self._dP_eval(first)
        if l is not None:
            beyond = s > l
            if np.any(beyond):
                sb = s[beyond]
                c = self._Pl * l ** (-self.theta)
                P[beyond] = c * sb**self.theta
                Vs[beyond] = self._Vl + c * (sb**self.theta - l**self.theta) / self.theta
                dP[beyond] = self.theta * c * sb ** (self.theta - 1.0)
        return s, P, Vs, dP

    # -------------------------------------------------------------------------
    def _select(self, u, base_fn, trunc_fn) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        if self.identity and self.l is None:
            return base_fn(u)
        s = np.abs(u)
        inner = s <= self.k
        if self.identity:
            inner = s <= self.l
        out[inner] = base_fn(u[inner])
        outer = ~inner
        if np.any(outer):
            out[outer] = trunc_fn(u[outer])
        return out

    def _identity_parts(self, u):
        # identity first stage: beyond l continue from the base model
        s = np.abs(np.asarray(u, dtype=float))
        l = self.l  # noqa: E741
        c = l * float(self.base.Vprime(l)) * l ** (-self.theta)
        P = c * s**self.theta
        Vs = float(self.base.V(l)) + c * (s**self.theta - l**self.theta) / self.theta
        dP = self.theta * c * s ** (self.theta - 1.0)
        return s, P, Vs, dP

    def _trunc_parts(self, u):
        if self.identity:
            return self._identity_parts(u)
        return self._parts(u)

    def V(self, u: ArrayLike) -> np.ndarray:
        return self._select(u, self.base.V, lambda x: self._trunc_parts(x)[2])

    def Vprime(self, u: ArrayLike) -> np.ndarray:
        def _tr(x):
            s, P, _, _ = self._trunc_parts(x)
            return np.sign(x) * P / s

        return self._select(u, self.base.Vprime, _tr)

    def f(self, u: ArrayLike) -> np.ndarray:
        def _tr(x):
            return self._trunc_parts(x)[2] * x**2

        return self._select(u, self.base.f, _tr)

    def fprime(self, u: ArrayLike) -> np.ndarray:
        def _tr(x):
            _, P, Vs, _ = self._trunc_parts(x)
            return x * (P + 2.0 * Vs)

        return self._select(u, self.base.fprime, _tr)

    def fpp(self, u: ArrayLike) -> np.ndarray:
        def _tr(x):
            s, P, Vs, dP = self._trunc_parts(x)
            return 2.0 * Vs + 3.0 * P + s * dP

        return self._select(u, self.base.fpp, _tr)

    def g(self, u: ArrayLike) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return u * self.fprime(u) - 2.0 * self.f(u)

    def __repr__(self) -> str:
        return (
            f"TruncatedModel(kind={self.base.kind!r}, theta={self.theta}, k={self.k}, "
            f"l={self.l}, identity={self.identity})"
        )


# -----------------------------------------------------------------------------


def truncate_first(
    model: NonlinearityModel,
    theta: float = 0.5,
    k: float = 1.0,
    z_max: typing.Optional[float] = None,
    points_per_decade: int = 2048,
) -> TruncatedModel:
    """
    First truncation stage ``V -> V_k``.

    Parameters
    ----------
    model : NonlinearityModel
        A defocusing model.
    theta : float, optional
        Growth exponent in (0, 1). Default is 0.5.
    k : float, optional
        Truncation radius, > 0. Default is 1.
    z_max : float, optional
        End of the tabulation grid. Default is ``1000 k``.
    points_per_decade : int, optional
        Table density. Default is 2048.

    Returns
    -------
    TruncatedModel
        ``f_k`` with ``f_k = f`` on ``|z| <= k``.

    Raises
    ------
    ValueError
        For a focusing model or parameters out of range.
    QuadratureError
        If the quadrature of ``V_k'`` fails on a table interval.
    """
    if model.sign != "defocusing":
        raise ValueError("truncation is defined for defocusing models")
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    return TruncatedModel(model, theta=theta, k=k, z_max=z_max, points_per_decade=points_per_decade)


def truncate_second(tr: TruncatedModel, l: float) -> TruncatedModel:  # noqa: E741
    """
    Second truncation stage ``V_k -> V_kl``; reuses the first-stage table.

    Raises
    ------
    ValueError
        If ``l <= k`` or ``tr`` is already a second-stage model.
    """
    if tr.l is not None:
        raise ValueError("model is already truncated at a second stage")
    if l <= tr.k:
        raise ValueError(f"need l > k, got l={l}, k={tr.k}")
    z_max = min(max(tr.z_max, 10.0 * l), tr.base.magnitude_limit(_TABLE_HEADROOM))
    table = {"z": tr._z, "P": tr._P, "Vk": tr._Vk, "identity": tr.identity}
    if z_max > tr.z_max:
        table = None
    return TruncatedModel(
        tr.base,
        theta=tr.theta,
        k=tr.k,
        l=l,
        z_max=z_max,
        points_per_decade=tr.points_per_decade,
        _table=table,
    )


# -----------------------------------------------------------------------------


def lipschitz_ratio(
    tr: TruncatedModel,
    sample_range: typing.Tuple[float, float] = (-50.0, 50.0),
    n_samples: int = 401,
) -> float:
    """
    ``sup |f'(z1) - f'(z2)| / ((|z1| + |z2|)^theta |z1 - z2|)`` over sampled pairs.
    """
    z = np.linspace(sample_range[0], sample_range[1], int(n_samples))
    fp = tr.fprime(z)
    i, j = np.triu_indices(z.size, k=1)
    num = np.abs(fp[i] - fp[j])
    den = (np.abs(z[i]) + np.abs(z[j])) ** tr.theta * np.abs(z[i] - z[j])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return float(np.max(ratio))


def v_dominance_constant(
    tr: TruncatedModel,
    sample_range: typing.Tuple[float, float] = (0.0, 50.0),
    n_samples: int = 2001,
) -> float:
    """``sup V_k(z) / (1 + z V_k'(z))``; bounded independently of ``k``."""
    z = np.linspace(sample_range[0], sample_range[1], int(n_samples))
    return float(np.max(tr.V(z) / (1.0 + z * tr.Vprime(z))))


def truncation_table(
    model: NonlinearityModel,
    theta: float,
    k: float,
    l: typing.Optional[float] = None,  # noqa: E741
    z: typing.Optional[npt.ArrayLike] = None,
) -> pd.DataFrame:
    """
    Side-by-side table of ``f, f_k, f_kl`` and their derivatives.

    Returns
    -------
    pandas.DataFrame
        Columns ``z, f, f_k, f_kl, f', f_k', f_kl'``. The ``f_kl`` columns repeat
        ``f_k`` when ``l`` is None. The base columns are NaN where an exponential
        model is out of range.
    """
    tr_k = truncate_first(model, theta=theta, k=k)
    tr_kl = truncate_second(tr_k, l) if l is not None else tr_k
    if z is None:
        z_hi = 4.0 * (l if l is not None else k)
        z = np.linspace(0.0, z_hi, 201)
    z = np.asarray(z, dtype=float)
    return pd.DataFrame(
        {
            "z": z,
            "f": _within_range(model, model.f, z),
            "f_k": tr_k.f(z),
            "f_kl": tr_kl.f(z),
            "f'": _within_range(model, model.fprime, z),
            "f_k'": tr_k.fprime(z),
            "f_kl'": tr_kl.fprime(z),
        }
    )


def _within_range(model: NonlinearityModel, fn: typing.Callable, z: np.ndarray) -> np.ndarray:
    out = np.full_like(z, np.nan)
    ok = np.abs(z) <= model.magnitude_limit(0.999)
    out[ok] = fn(z[ok])
    return out
