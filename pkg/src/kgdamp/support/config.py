"""
Run and sweep configuration.
Part of the kg-damp package.

pydantic schema of the JSON configuration files, cross-field rules, the loader with its
report of applied defaults and the builders that turn a config into grid, damper,
nonlinearity and scheme objects.
"""

from __future__ import annotations

import json
import logging
import os
import typing

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from kgdamp.functions.grid import DamperProfile, Grid
from kgdamp.functions.nonlinearity import NonlinearityModel, truncate_first, truncate_second
from kgdamp.functions.stepper import SchemeConfig
from kgdamp.support.errors import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV = "KG_DAMP_THREADS"


class _Block(BaseModel):
    model_config = ConfigDict(from_attributes=True, arbitrary_types_allowed=True, extra="forbid")


class GeometryConfig(_Block):
    N: int = 1
    L: float = 40.0
    dr: float = 0.05
    r_inner: float = 0.0
    geometry: typing.Literal["auto", "line", "radial"] = "auto"

    @property
    def resolved(self) -> str:
        if self.geometry != "auto":
            return self.geometry
        return "line" if self.N == 1 and self.r_inner == 0.0 else "radial"


class DamperConfig(_Block):
    M: float = 1.0
    R: float = 5.0
    a0: float = 1.0
    shape: typing.Literal["sharp", "smoothstep", "uniform"] = "smoothstep"
    width: float = 1.0


class TruncationConfig(_Block):
    theta: float = 0.5
    k: float = 1.0
    l: typing.Optional[float] = None  # noqa: E741


class NonlinearityConfig(_Block):
    kind: typing.Literal[
        "none", "power_sum", "pure_power", "exponential_power", "exp2d", "log_perturbed"
    ] = "power_sum"
    coefficients: typing.List[typing.Tuple[float, float]] = Field(
        default_factory=lambda: [(1.0, 4.0)]
    )
    lam: float = 1.0
    mu: float = 0.0
    nu: float = 0.0
    alpha: float = 0.0
    C0: typing.Optional[float] = None
    q_growth: typing.Optional[float] = None
    truncation: typing.Optional[TruncationConfig] = None


class InitialDataConfig(_Block):
    kind: typing.Literal["gaussian", "bump", "ground_state_multiple", "eigenmode"] = "gaussian"
    amplitude: float = 1.0
    center: float = 0.0
    width: float = 1.0
    velocity_amplitude: float = 0.0
    kappa: float = 1.0
    eigen_index: int = 0
    c: float = 1.0
    m: typing.Optional[float] = None


class TimeConfig(_Block):
    dt: float = 0.04
    T_final: float = 10.0
    sample_stride: typing.Optional[int] = None
    scheme: typing.Literal["conservative", "leapfrog_explicit"] = "conservative"
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    sv_epsilon: float = 1e-10
    blowup_threshold: float = 1e6

    @property
    def stride(self) -> int:
        if self.sample_stride is not None:
            return self.sample_stride
        return max(1, int(np.floor(0.1 / self.dt + 1e-9)))


class DiagnosticsConfig(_Block):
    S_cone: typing.Optional[float] = None
    p_sobolev: typing.Optional[float] = None
    chi_R: typing.Optional[float] = None
    fit_window: typing.Optional[typing.Tuple[float, float]] = None
    cone_margin: typing.Optional[float] = None


class OutputsConfig(_Block):
    csv_path: str = "diagnostics.csv"
    summary_path: str = "summary.json"
    snapshot_stride: typing.Optional[int] = None
    snapshot_dir: str = "snapshots"


class RunConfig(_Block):
    """
    Complete description of one run.

    Cross-field rules checked at load: the time step restriction of the scheme
    (``CFL violation``), the exponent range of the weighted Lebesgue term
    (``p below 2+4/N``, ``p above 2N/(N-2)``), ``dr`` dividing the domain, ground-state
    data only in focusing mode, the critical ``pure_power`` kind only for ``N >= 3`` (and
    with a user-supplied ``m`` when focusing) and the validity window
    ``T_final <= L - support`` (a warning, since reflections from the outer wall then
    pollute decay measurements).
    """

    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    damper: DamperConfig = Field(default_factory=DamperConfig)
    nonlinearity: NonlinearityConfig = Field(default_factory=NonlinearityConfig)
    mode: typing.Literal["defocusing", "focusing"] = "defocusing"
    initial_data: InitialDataConfig = Field(default_factory=InitialDataConfig)
    time: TimeConfig = Field(default_factory=TimeConfig)
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)
    outputs: OutputsConfig = Field(default_factory=OutputsConfig)

    @model_validator(mode="after")
    def _cross_field(self) -> "RunConfig":
        g, tm = self.geometry, self.time
        limit = 0.9 * g.dr if tm.scheme == "leapfrog_explicit" else g.dr
        if tm.dt <= 0 or g.dr <= 0:
            raise ValueError("dt and dr must be positive")
        if tm.dt > limit * (1.0 + 1e-12):
            raise ValueError(
                f"CFL violation: dt={tm.dt} exceeds {limit:g} for the {tm.scheme} scheme"
            )
        span = 2.0 * g.L if g.resolved == "line" else g.L - g.r_inner
        n = round(span / g.dr)
        if n < 2 or abs(n * g.dr - span) > 1e-9 * span:
            raise ValueError(f"grid rule: dr={g.dr} does not divide the domain length {span}")
        p = self.diagnostics.p_sobolev
        if p is not None:
            if p < 2.0 + 4.0 / g.N - 1e-12:
                raise ValueError(f"p below 2+4/N: p_sobolev={p}, N={g.N}")
            if g.N > 2 and p > 2.0 * g.N / (g.N - 2) + 1e-12:
                raise ValueError(f"p above 2N/(N-2): p_sobolev={p}, N={g.N}")
        if self.initial_data.kind == "ground_state_multiple" and self.mode != "focusing":
            raise ValueError("mode rule: ground_state_multiple data needs focusing mode")
        if self.nonlinearity.kind == "pure_power":
            if g.N < 3:
                raise ValueError(
                    f"pure_power needs N >= 3 for the exponent 2N/(N-2), got N={g.N}"
                )
            # the critical power with mass has no ground state to shoot
            if self.mode == "focusing" and (
                self.initial_data.m is None or self.initial_data.kind == "ground_state_multiple"
            ):
                raise ValueError(
                    "mode rule: focusing pure_power runs need initial_data.m and "
                    "non ground-state data"
                )
        if tm.T_final < 0:
            raise ValueError("T_final must be nonnegative")
        return self

    # -------------------------------------------------------------------------
    def validity_warnings(self) -> typing.List[str]:
        """Warnings about the validity window of decay measurements."""
        idata = self.initial_data
        support = abs(idata.center) + 3.0 * idata.width
        if idata.kind in ("ground_state_multiple", "eigenmode"):
            support = 0.0
        out = []
        if self.time.T_final > self.geometry.L - support:
            out.append(
                f"T_final={self.time.T_final:g} exceeds L - support = "
                f"{self.geometry.L - support:g}; reflections from the outer wall reach the data"
            )
        if self.time.stride * self.time.dt > 0.1 + 1e-12:
            out.append("sample_stride*dt exceeds 0.1; cone integrals lose accuracy")
        return out

    def build_grid(self) -> Grid:
        g = self.geometry
        return Grid(N=g.N, L=g.L, dr=g.dr, r_inner=g.r_inner, geometry=g.resolved)

    def build_damper(self) -> DamperProfile:
        return DamperProfile(**self.damper.model_dump())

    def build_model(self):
        nl = self.nonlinearity
        kind, coefficients = nl.kind, nl.coefficients if nl.kind == "power_sum" else []
        if kind == "pure_power":
            N = self.geometry.N
            kind, coefficients = "power_sum", [(1.0, 2.0 * N / (N - 2))]
        base = NonlinearityModel(
            kind=kind,
            coefficients=coefficients,
            lam=nl.lam,
            mu=nl.mu,
            nu=nl.nu,
            alpha=nl.alpha,
            sign=self.mode,
            C0=nl.C0,
            q_growth=nl.q_growth,
        )
        if nl.truncation is None:
            return base
        tr = truncate_first(base, theta=nl.truncation.theta, k=nl.truncation.k)
        if nl.truncation.l is not None:
            tr = truncate_second(tr, nl.truncation.l)
        return tr

    def build_scheme(self) -> SchemeConfig:
        tm = self.time
        return SchemeConfig(
            dt=tm.dt,
            scheme=tm.scheme,
            newton_tol=tm.newton_tol,
            newton_max_iter=tm.newton_max_iter,
            sv_epsilon=tm.sv_epsilon,
            blowup_threshold=tm.blowup_threshold,
        )


class SweepAxis(_Block):
    path: str
    values: typing.List[typing.Any]


class SweepConfig(_Block):
    base: RunConfig = Field(default_factory=RunConfig)
    axes: typing.List[SweepAxis] = Field(default_factory=list)
    parallelism: int = 1
    output_dir: str = "sweep"

    @model_validator(mode="after")
    def _check_axes(self) -> "SweepConfig":
        if not self.axes:
            raise ValueError("no axes")
        for axis in self.axes:
            if not _path_exists(RunConfig, axis.path):
                raise ValueError(f"axis path {axis.path!r} is not a RunConfig field")
            if not axis.values:
                raise ValueError(f"axis {axis.path!r} has no values")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        return self

    @property
    def workers(self) -> int:
        """Worker count, capped by ``KG_DAMP_THREADS``."""
        cap = os.getenv(THREADS_ENV)
        if cap:
            try:
                return max(1, min(self.parallelism, int(cap)))
            except ValueError:
                logger.warning("ignoring non-integer %s=%r", THREADS_ENV, cap)
        return self.parallelism


# =============================================================================
# LOADING
# =============================================================================
def _path_exists(model_cls: typing.Type[BaseModel], path: str) -> bool:
    head, _, rest = path.partition(".")
    field = model_cls.model_fields.get(head)
    if field is None:
        return False
    if not rest:
        return True
    ann = field.annotation
    for cand in typing.get_args(ann) or (ann,):
        if isinstance(cand, type) and issubclass(cand, BaseModel):
            return _path_exists(cand, rest)
    return False


def set_path(data: dict, path: str, value: typing.Any) -> dict:
    """Set the dotted ``path`` in the nested dict ``data`` (in place) and return it."""
    keys = path.split(".")
    node = data
    for key in keys[:-1]:
        if node.get(key) is None:
            node[key] = {}
        node = node[key]
    node[keys[-1]] = value
    return data


def defaults_report(model: BaseModel, raw: dict, prefix: str = "") -> typing.List[str]:
    """List ``path = value`` for every field of ``model`` absent from ``raw``."""
    report = []
    for name in type(model).model_fields:
        value = getattr(model, name)
        path = f"{prefix}{name}"
        if name not in raw:
            if isinstance(value, BaseModel):
                report.extend(defaults_report(value, {}, prefix=f"{path}."))
            else:
                report.append(f"{path} = {value!r}")
        elif isinstance(value, BaseModel) and isinstance(raw[name], dict):
            report.extend(defaults_report(value, raw[name], prefix=f"{path}."))
    return report


def _as_config_error(exc: ValidationError) -> ConfigError:
    err = exc.errors()[0]
    loc = ".".join(str(p) for p in err.get("loc", ())) or "<root>"
    msg = err.get("msg", "invalid value").removeprefix("Value error, ")
    return ConfigError(f"{loc}: {msg}")


def read_json(path: typing.Union[str, os.PathLike]) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        logger.error("cannot read config %s", path)
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a JSON object")
    return raw


def parse_config(raw: dict) -> typing.Tuple[RunConfig, typing.List[str]]:
    """Validate a raw dict; returns the config and the applied-defaults report."""
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise _as_config_error(exc) from exc
    for warning in cfg.validity_warnings():
        logger.warning(warning)
    return cfg, defaults_report(cfg, raw)


def load_config(path: typing.Union[str, os.PathLike]) -> typing.Tuple[RunConfig, typing.List[str]]:
    """
    Load and validate a run configuration file.

    Parameters
    ----------
    path : str or PathLike
        JSON file.

    Returns
    -------
    config : RunConfig
        The validated configuration with defaults filled in.
    report : list of str
        One ``dotted.path = value`` entry per applied default.

    Raises
    ------
    ConfigError
        On unreadable files, JSON syntax errors (with line and column), schema violations
        (naming the field) and cross-field violations (naming the rule).
    """
    cfg, report = parse_config(read_json(path))
    logger.info("loaded %s (%d defaults applied)", path, len(report))
    return cfg, report


def load_sweep(path: typing.Union[str, os.PathLike]) -> SweepConfig:
    """Load a sweep file whose ``base`` is an inline run config or a path to one."""
    raw = read_json(path)
    base = raw.get("base", {})
    if isinstance(base, str):
        base_path = os.path.join(os.path.dirname(os.fspath(path)), base)
        raw = {**raw, "base": read_json(base_path)}
    try:
        return SweepConfig.model_validate(raw)
    except ValidationError as exc:
        raise _as_config_error(exc) from exc
