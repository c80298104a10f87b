# -*- coding: utf-8 -*-
"""
Spatial Discretization Functions module.
Part of the kg-damp package.

Radially symmetric N-dimensional grids (and the 1D whole line), the flux-form discrete
Laplacian, the matching Dirichlet form, quadrature, gradients and the damper/cutoff
profiles.
"""

from __future__ import annotations

import logging
import math
import typing

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, model_validator
from scipy import linalg, special

from kgdamp.support.errors import GridError

logger = logging.getLogger(__name__)


# =============================================================================
# GRID
# =============================================================================
def sphere_measure(N: int) -> float:
    """Surface measure of the unit sphere in R^N (2 for N=1, 2*pi for N=2, 4*pi for N=3)."""
    return float(2.0 * math.pi ** (N / 2.0) / special.gamma(N / 2.0))


def ball_volume(N: int, L: float, r_inner: float = 0.0) -> float:
    """Volume of the shell ``r_inner < |x| < L`` in R^N."""
    return sphere_measure(N) / N * (L**N - r_inner**N)


class Grid(BaseModel):
    """
    Uniform grid for radial or whole-line problems.

    ``geometry="radial"`` discretizes ``r in [r_inner, L]`` with nodes ``r_j = r_inner + j dr``;
    the outer node (and the inner one when ``r_inner > 0``) carries a homogeneous Dirichlet
    condition, the origin (``r_inner = 0``) is a symmetry point. ``geometry="line"`` (only
    for ``N = 1``) discretizes ``x in [-L, L]`` with Dirichlet conditions at both ends.

    Quadrature weights are the control volumes ``w_j = |{x : r_{j-1/2} < |x| < r_{j+1/2}}|``
    (half cells at the ends), so ``sum w`` is the exact shell volume and the weights coincide
    with the trapezoidal rule for ``N = 1``. The Laplacian is written in flux form with edge
    conductances ``kappa_{j+1/2} = omega r_{j+1/2}^(N-1) / dr``, which makes ``W Delta_h``
    symmetric and gives exact summation by parts against :func:`dirichlet_form`.

    Attributes
    ----------
    N : int
        Spatial dimension, >= 1.
    L : float
        Outer radius (half length for the line).
    dr : float
        Grid spacing.
    r_inner : float
        Radius of the ball obstacle (0 for the whole space).
    geometry : str
        ``radial`` or ``line``.
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)

    N: int = 1
    L: float
    dr: float
    r_inner: float = 0.0
    geometry: typing.Literal["radial", "line"] = "radial"

    _x: np.ndarray = PrivateAttr()
    _weights: np.ndarray = PrivateAttr()
    _kappa: np.ndarray = PrivateAttr()
    _dirichlet: np.ndarray = PrivateAttr()

    def _check_geometry(self) -> None:
        if self.N < 1:
            raise GridError(f"N must be >= 1, got {self.N}")
        if self.dr <= 0 or self.L <= 0:
            raise GridError("L and dr must be positive")
        if self.r_inner < 0 or self.r_inner >= self.L:
            raise GridError(f"need 0 <= r_inner < L, got r_inner={self.r_inner}, L={self.L}")
        if self.geometry == "line" and (self.N != 1 or self.r_inner != 0.0):
            raise GridError("line geometry requires N=1 and no obstacle")
        span = 2.0 * self.L if self.geometry == "line" else self.L - self.r_inner
        n = int(round(span / self.dr))
        if n < 2 or abs(n * self.dr - span) > 1e-9 * span:
            raise GridError(f"dr={self.dr} does not divide the domain length {span}")

    def model_post_init(self, __context: typing.Any) -> None:
        self._check_geometry()
        dr = self.dr
        if self.geometry == "line":
            n = int(round(2.0 * self.L / dr))
            x = -self.L + dr * np.arange(n + 1)
            weights = np.full(n + 1, dr)
            weights[[0, -1]] = dr / 2.0
            kappa = np.full(n, 1.0 / dr)
            dirichlet = np.zeros(n + 1, dtype=bool)
            dirichlet[[0, -1]] = True
        else:
            n = int(round((self.L - self.r_inner) / dr))
            x = self.r_inner + dr * np.arange(n + 1)
            x[-1] = self.L
            omega = sphere_measure(self.N)
            edges = np.concatenate(([x[0]], 0.5 * (x[1:] + x[:-1]), [x[-1]]))
            weights = omega / self.N * np.diff(edges**self.N)
            kappa = omega * (0.5 * (x[1:] + x[:-1])) ** (self.N - 1) / dr
            dirichlet = np.zeros(n + 1, dtype=bool)
            dirichlet[-1] = True
            if self.r_inner > 0:
                dirichlet[0] = True
        self._x = x
        self._weights = weights
        self._kappa = kappa
        self._dirichlet = dirichlet
        logger.debug(
            "Grid %s N=%d: %d nodes, dr=%g, volume %.12g",
            self.geometry,
            self.N,
            x.size,
            dr,
            weights.sum(),
        )

    # -------------------------------------------------------------------------
    @property
    def nodes(self) -> int:
        return int(self._x.size)

    @property
    def x(self) -> np.ndarray:
        """Signed node coordinate (``r`` for radial grids)."""
        return self._x

    @property
    def r(self) -> np.ndarray:
        """Distance of each node from the origin."""
        return np.abs(self._x)

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def kappa(self) -> np.ndarray:
        """Edge conductances of the flux-form Laplacian (one per cell edge)."""
        return self._kappa

    @property
    def dirichlet(self) -> np.ndarray:
        """Boolean mask of the nodes held at zero."""
        return self._dirichlet

    @property
    def free(self) -> np.ndarray:
        return ~self._dirichlet

    @property
    def volume(self) -> float:
        if self.geometry == "line":
            return 2.0 * self.L
        return ball_volume(self.N, self.L, self.r_inner)

    def check(self, u: np.ndarray, name: str = "field") -> np.ndarray:
        """Return ``u`` as a float array, raising :class:`GridError` on a size mismatch."""
        u = np.asarray(u, dtype=float)
        if u.shape != self._x.shape:
            raise GridError(
                f"{name} has shape {u.shape}, grid has {self._x.size} nodes"
            )
        return u

    def apply_dirichlet(self, u: np.ndarray) -> np.ndarray:
        u = np.array(u, dtype=float, copy=True)
        u[self._dirichlet] = 0.0
        return u


# -----------------------------------------------------------------------------


def laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    """
    Discrete Laplacian ``Delta_h u``.

    Flux form ``(kappa_{j+1/2}(u_{j+1}-u_j) - kappa_{j-1/2}(u_j-u_{j-1})) / w_j``. At the origin
    only the outer flux is present, which reproduces the regular limit ``N u''(0)``. Values at
    Dirichlet nodes are returned as 0.

    Parameters
    ----------
    grid : Grid
        The grid.
    u : np.ndarray
        Nodal values, one per grid node.

    Returns
    -------
    np.ndarray
        ``Delta_h u`` at every node.

    Raises
    ------
    GridError
        If ``u`` is not sized to the grid.
    """
    u = grid.check(u)
    flux = grid.kappa * np.diff(u)
    div = np.zeros_like(u)
    div[:-1] += flux
    div[1:] -= flux
    lap = div / grid.weights
    lap[grid.dirichlet] = 0.0
    return lap


def laplacian_bands(grid: Grid) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Tridiagonal bands ``(lower, diag, upper)`` of ``Delta_h`` restricted to free nodes.

    Rows of Dirichlet nodes are zero.
    """
    w = grid.weights
    k = grid.kappa
    diag = np.zeros(grid.nodes)
    diag[:-1] -= k
    diag[1:] -= k
    diag = diag / w
    upper = k / w[:-1]  # entry (j, j+1)
    lower = k / w[1:]  # entry (j+1, j)
    mask = grid.dirichlet
    diag[mask] = 0.0
    upper[mask[:-1]] = 0.0
    lower[mask[1:]] = 0.0
    return lower, diag, upper


def integrate(grid: Grid, values: np.ndarray) -> float:
    """Weighted sum ``sum_j w_j values_j``."""
    values = grid.check(values, "values")
    return float(np.dot(grid.weights, values))


def dirichlet_form(grid: Grid, u: np.ndarray, w: typing.Optional[np.ndarray] = None) -> float:
    """
    Discrete ``int grad u . grad w`` as a sum over cell edges.

    For ``u`` vanishing at the Dirichlet nodes,
    ``integrate(grid, u * laplacian(grid, w)) == -dirichlet_form(grid, u, w)`` up to roundoff.
    """
    u = grid.check(u)
    du = np.diff(u)
    dw = du if w is None else np.diff(grid.check(w))
    return float(np.dot(grid.kappa, du * dw))


def gradient_radial(grid: Grid, u: np.ndarray) -> np.ndarray:
    """
    Radial derivative ``d u / d r`` (``d u / d x`` on the line).

    Centered differences in the interior, second-order one-sided differences at the ends.
    """
    u = grid.check(u)
    return np.gradient(u, grid.x, edge_order=2)


def dirichlet_eigenmode(grid: Grid, index: int = 0) -> typing.Tuple[float, np.ndarray]:
    """
    Discrete Dirichlet eigenpair of ``-Delta_h``.

    Parameters
    ----------
    grid : Grid
        The grid.
    index : int, optional
        Eigenvalue index in ascending order. Default is 0 (the first eigenmode).

    Returns
    -------
    eigval : float
        ``lambda`` with ``-laplacian(grid, phi) == lambda * phi`` at the free nodes.
    phi : np.ndarray
        Eigenfunction normalized to ``integrate(phi**2) == 1`` and positive where largest.
    """
    free = grid.free
    w = grid.weights[free]
    idx = np.flatnonzero(free)
    lower, diag, upper = laplacian_bands(grid)
    # symmetric scaling W^{1/2} (-Delta_h) W^{-1/2}
    sq = np.sqrt(w)
    d = -diag[idx]
    e = -upper[idx[:-1]] * sq[:-1] / sq[1:]
    vals, vecs = linalg.eigh_tridiagonal(d, e, select="i", select_range=(index, index))
    phi = np.zeros(grid.nodes)
    phi[idx] = vecs[:, 0] / sq
    phi /= math.sqrt(integrate(grid, phi**2))
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    return float(vals[0]), phi


# =============================================================================
# PROFILES
# =============================================================================
def smoothstep(s: np.ndarray) -> np.ndarray:
    """Quintic smoothstep ``6s^5 - 15s^4 + 10s^3`` clipped to [0, 1]."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s**3 * (10.0 + s * (-15.0 + 6.0 * s))


def smoothstep_prime(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    return np.where(inside, 30.0 * s**2 * (1.0 - s) ** 2, 0.0)


def cutoff_chi(grid: Grid, R: float) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    Cutoff ``chi`` equal to 1 on ``r < R`` and 0 on ``r > 2R``, with its exact derivative.

    Returns
    -------
    chi : np.ndarray
        Cutoff values.
    dchi : np.ndarray
        ``d chi / d x`` (signed on the line).
    """
    if R <= 0:
        raise ValueError(f"cutoff radius must be positive, got {R}")
    s = (grid.r - R) / R
    chi = 1.0 - smoothstep(s)
    dchi = -smoothstep_prime(s) / R * np.sign(grid.x)
    return chi, dchi


class DamperProfile(BaseModel):
    """
    Damping coefficient ``a(x)``.

    ``0 <= a <= M`` everywhere and ``a >= a0`` for ``|x| > R + width``. Shapes: ``sharp``
    (``a0`` beyond ``R``), ``smoothstep`` (quintic ramp from ``R`` to ``R + width``) and
    ``uniform`` (``a0`` everywhere).
    """

    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True)

    M: float = 1.0
    R: float = 5.0
    a0: float = 1.0
    shape: typing.Literal["sharp", "smoothstep", "uniform"] = "smoothstep"
    width: float = 1.0

    @model_validator(mode="after")
    def _check_bounds(self) -> "DamperProfile":
        if self.a0 < 0 or self.M < 0:
            raise ValueError("damper constants must be nonnegative")
        if self.a0 > self.M:
            raise ValueError(f"a0={self.a0} exceeds the sup bound M={self.M}")
        if self.shape == "smoothstep" and self.width <= 0:
            raise ValueError("smoothstep damper needs width > 0")
        return self

    def values(self, grid: Grid) -> np.ndarray:
        r = grid.r
        if self.shape == "uniform":
            return np.full(grid.nodes, self.a0)
        if self.shape == "sharp":
            return np.where(r > self.R, self.a0, 0.0)
        return self.a0 * smoothstep((r - self.R) / self.width)

    @property
    def is_zero(self) -> bool:
        return self.a0 == 0.0
