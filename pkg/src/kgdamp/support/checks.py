"""
Built-in invariant suite.
Part of the kg-damp package.

Each check builds a small problem, measures one quantity and compares it with a threshold.
``use_sv_quotient=False`` swaps the difference quotient of the scheme for the midpoint
derivative, which must make the energy checks fail.
"""

from __future__ import annotations

import logging
import typing

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from kgdamp.functions import diagnostics, rates, stepper, variational
from kgdamp.functions.grid import DamperProfile, Grid
from kgdamp.functions.nonlinearity import NonlinearityModel, truncate_first

logger = logging.getLogger(__name__)


class CheckResult(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


CheckFn = typing.Callable[[bool], CheckResult]


def _quartic(sign: str = "defocusing", lam: float = 1.0) -> NonlinearityModel:
    return NonlinearityModel(kind="power_sum", coefficients=[(1.0, 4.0)], lam=lam, sign=sign)


def _energy_defect(
    grid: Grid, damper: DamperProfile, model, u0, dt: float, T: float, sv: bool
) -> typing.Tuple[float, float]:
    scheme = stepper.SchemeConfig(dt=dt, use_sv_quotient=sv)
    hist = stepper.run(
        grid, damper, model, scheme, u0, np.zeros_like(u0), T, sample_stride=2, progress=False
    )
    E0 = float(hist.E[0])
    return float(np.max(np.abs(hist.E - E0 + 2.0 * hist.A_cum))), E0


# =============================================================================
# CHECKS
# =============================================================================
def check_energy_identity_line(use_sv_quotient: bool = True) -> CheckResult:
    grid = Grid(N=1, L=20.0, dr=0.1, geometry="line")
    damper = DamperProfile(M=1.0, R=5.0, a0=1.0, shape="smoothstep")
    u0 = 1.2 * np.exp(-(grid.x**2))
    defect, E0 = _energy_defect(grid, damper, _quartic(), u0, 0.05, 10.0, use_sv_quotient)
    tol = 1e-8 * (1.0 + E0)
    return CheckResult(
        name="energy_identity_line",
        passed=defect <= tol,
        value=defect,
        threshold=tol,
        detail="N=1 quartic, exterior damper",
    )


def check_energy_identity_radial(use_sv_quotient: bool = True) -> CheckResult:
    grid = Grid(N=3, L=20.0, dr=0.1, geometry="radial")
    damper = DamperProfile(M=1.0, R=5.0, a0=1.0, shape="smoothstep")
    model = NonlinearityModel(kind="exponential_power", lam=1.0, mu=1.0, nu=2.0, alpha=2.0)
    u0 = 0.8 * np.exp(-((grid.r / 2.0) ** 2))
    defect, E0 = _energy_defect(grid, damper, model, u0, 0.05, 5.0, use_sv_quotient)
    tol = 1e-8 * (1.0 + E0)
    return CheckResult(
        name="energy_identity_radial",
        passed=defect <= tol,
        value=defect,
        threshold=tol,
        detail="N=3 exponential_power, exterior damper",
    )


def check_reversibility(use_sv_quotient: bool = True) -> CheckResult:
    grid = Grid(N=1, L=20.0, dr=0.1, geometry="line")
    damper = DamperProfile(a0=0.0)
    model = _quartic()
    scheme = stepper.SchemeConfig(dt=0.05, use_sv_quotient=use_sv_quotient)
    u0 = np.exp(-(grid.x**2))
    state = stepper.initial_state(grid, damper, model, scheme, u0, np.zeros_like(u0))
    n_steps = 100
    for _ in range(n_steps):
        state = stepper.step(state, grid, damper, model, scheme)
    state = stepper.reverse_state(state)
    for _ in range(n_steps):
        state = stepper.step(state, grid, damper, model, scheme)
    err = float(np.max(np.abs(state.u_curr - u0)))
    return CheckResult(
        name="reversibility",
        passed=err <= 1e-8,
        value=err,
        threshold=1e-8,
        detail=f"{n_steps} steps forward and back, a=0",
    )


def _sech_ground_state() -> typing.Tuple[Grid, NonlinearityModel, variational.GroundState]:
    grid = Grid(N=1, L=20.0, dr=0.05, geometry="line")
    model = NonlinearityModel(
        kind="power_sum", coefficients=[(0.5, 4.0)], sign="focusing"
    )
    return grid, model, variational.shoot_ground_state(model, 1.0, 1, grid)


def check_ground_state_oracle(use_sv_quotient: bool = True) -> CheckResult:
    grid, _, gs = _sech_ground_state()
    err = float(np.max(np.abs(gs.Q - 1.0 / np.cosh(grid.x))))
    m_err = abs(gs.m - 4.0 / 3.0)
    passed = err <= 1e-6 and m_err <= 1e-4 and abs(gs.K) <= 1e-6
    return CheckResult(
        name="ground_state_oracle",
        passed=passed,
        value=err,
        threshold=1e-6,
        detail=f"f=u^4/2: m={gs.m:.8f}, K={gs.K:.2e}",
    )


def check_classification_examples(use_sv_quotient: bool = True) -> CheckResult:
    grid, model, gs = _sech_ground_state()
    zero = np.zeros_like(gs.Q)
    below = variational.classify(0.95 * gs.Q, zero, grid, model, gs.m)
    above = variational.classify(1.05 * gs.Q, zero, grid, model, gs.m)
    passed = below.label == "Kplus" and above.label == "Kminus"
    return CheckResult(
        name="classification_examples",
        passed=passed,
        value=float(passed),
        threshold=1.0,
        detail=f"0.95Q -> {below.label}, 1.05Q -> {above.label}",
    )


def check_rate_formula(use_sv_quotient: bool = True) -> CheckResult:
    res = rates.theoretical_rate(rates.RateInputs(M=1.0, R=1.0, a0=1.0, C0=1.0))
    expected = (20.085536923187668, 0.022639509, 0.0011146)
    got = (res.T, res.delta, res.gamma)
    rel = max(abs(g - e) / e for g, e in zip(got, expected))
    lattice_ok = rates.lattice_is_monotone(
        rates.rate_lattice(rates.RateInputs(M=1.0, R=1.0, a0=1.0, C0=1.0))
    )
    return CheckResult(
        name="rate_formula",
        passed=rel <= 1e-4 and lattice_ok,
        value=rel,
        threshold=1e-4,
        detail=f"T={res.T:.6f}, delta={res.delta:.7f}, gamma={res.gamma:.7f}",
    )


def check_truncation_example(use_sv_quotient: bool = True) -> CheckResult:
    tr = truncate_first(_quartic(), theta=0.5, k=1.0)
    value = float(tr.f(np.array([4.0]))[0])
    err = abs(value - 80.0)
    return CheckResult(
        name="truncation_example",
        passed=err <= 1e-6,
        value=err,
        threshold=1e-6,
        detail=f"f_k(4)={value:.10f} for f=u^4, theta=1/2, k=1",
    )


def check_equipartition(use_sv_quotient: bool = True) -> CheckResult:
    grid = Grid(N=1, L=20.0, dr=0.05, geometry="line")
    damper = DamperProfile(M=1.0, R=5.0, a0=1.0, shape="smoothstep")
    model = _quartic()
    scheme = stepper.SchemeConfig(dt=0.025, use_sv_quotient=use_sv_quotient)
    u0 = np.exp(-(grid.x**2))
    hist = stepper.run(
        grid, damper, model, scheme, u0, np.zeros_like(u0), 4.0, sample_stride=1, progress=False
    )
    res = diagnostics.equipartition_residual(hist, grid, damper, model, chi_R=5.0)
    value = float(np.max(np.abs(res["residual_full"])))
    tol = 5e-2 * (1.0 + float(hist.E[0]))
    return CheckResult(
        name="equipartition",
        passed=value <= tol,
        value=value,
        threshold=tol,
        detail="d/dt<v|u> = |v|^2 - K(u) - <av|u> on the samples",
    )


CHECKS: typing.Dict[str, CheckFn] = {
    "energy_identity_line": check_energy_identity_line,
    "energy_identity_radial": check_energy_identity_radial,
    "reversibility": check_reversibility,
    "ground_state_oracle": check_ground_state_oracle,
    "classification_examples": check_classification_examples,
    "rate_formula": check_rate_formula,
    "truncation_example": check_truncation_example,
    "equipartition": check_equipartition,
}


# =============================================================================
# SUITE
# =============================================================================
def list_checks() -> typing.List[str]:
    return list(CHECKS)


def select_checks(name_filter: typing.Optional[str] = None) -> typing.List[str]:
    """Names containing ``name_filter`` (all names when None)."""
    if name_filter is None:
        return list_checks()
    return [name for name in CHECKS if name_filter in name]


def run_checks(
    name_filter: typing.Optional[str] = None, use_sv_quotient: bool = True
) -> pd.DataFrame:
    """
    Run the selected checks.

    A check that raises counts as failed, with the exception in ``detail``.

    Returns
    -------
    pandas.DataFrame
        Columns ``name, passed, value, threshold, detail``; empty when the filter
        selects nothing.
    """
    rows = []
    for name in select_checks(name_filter):
        logger.info("check %s...", name)
        try:
            res = CHECKS[name](use_sv_quotient)
        except Exception as exc:  # noqa: BLE001
            logger.error("check %s raised %s", name, exc)
            res = CheckResult(
                name=name,
                passed=False,
                value=float("nan"),
                threshold=float("nan"),
                detail=f"{type(exc).__name__}: {exc}",
            )
        rows.append(res.model_dump())
    return pd.DataFrame(rows, columns=["name", "passed", "value", "threshold", "detail"])


def format_table(table: pd.DataFrame) -> str:
    """Fixed-width pass/fail table."""
    if table.empty:
        return "no checks selected"
    lines = [f"{'check':<26} {'result':<6} {'value':>12} {'threshold':>12}  detail"]
    for row in table.itertuples(index=False):
        lines.append(
            f"{row.name:<26} {'PASS' if row.passed else 'FAIL':<6} "
            f"{row.value:>12.3e} {row.threshold:>12.3e}  {row.detail}"
        )
    return "\n".join(lines)
