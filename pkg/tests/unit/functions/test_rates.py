import math

import numpy as np
import pytest
from kgdamp.functions import rates
from kgdamp.functions.rates import RateInputs
from kgdamp.support.errors import HistoryRangeError

from ...factory import synthetic_history


def test_theoretical_rate_unit_constants() -> None:
    res = rates.theoretical_rate(RateInputs(M=1.0, R=1.0, a0=1.0, C0=1.0))
    assert res.T == pytest.approx(math.exp(3.0))
    assert res.T == pytest.approx(20.0855, rel=1e-5)
    assert res.delta == pytest.approx(0.0226395, rel=1e-5)
    assert res.gamma == pytest.approx(0.0011146, rel=1e-4)
    assert res.gamma == pytest.approx(math.log1p(res.delta) / res.T)
    assert res.regime == "condition_f"


def test_theoretical_rate_weaker_condition_is_slower() -> None:
    base = RateInputs(M=1.0, R=1.0, a0=1.0, C0=1.0)
    f2 = RateInputs(
        M=1.0, R=1.0, a0=1.0, C0=1.0, regime="condition_f2", q_growth=6.0, E0=2.0
    )
    assert rates.theoretical_rate(f2).gamma < rates.theoretical_rate(base).gamma


def test_theoretical_rate_focusing_cap() -> None:
    inputs = RateInputs(
        M=1.0,
        R=1.0,
        a0=1.0,
        C0=0.0,
        regime="focusing",
        nu=1.0,
        C_script_N=0.0,
        epsilon=1e-6,
        E0=1.0,
    )
    res = rates.theoretical_rate(inputs)
    assert res.T == pytest.approx(math.exp(2.0))
    assert res.delta == pytest.approx(1e-6 / math.exp(2.0))


def test_theoretical_rate_overflow_gives_zero_rate() -> None:
    res = rates.theoretical_rate(RateInputs(M=1.0, R=40.0, a0=1.0, C0=1.0))
    assert math.isinf(res.T)
    assert res.gamma == 0.0


@pytest.mark.parametrize(
    "kwargs, msg",
    [
        ({"M": 0.0}, "must be positive"),
        ({"regime": "condition_f2"}, "needs q_growth, E0"),
        ({"regime": "focusing", "E0": 1.0}, "needs nu, C_script_N, epsilon"),
    ],
)
def test_rate_inputs_validation(kwargs, msg) -> None:
    params = {"M": 1.0, "R": 1.0, "a0": 1.0, "C0": 1.0, **kwargs}
    with pytest.raises(ValueError) as excinfo:
        RateInputs(**params)
    assert msg in str(excinfo.value)


def test_rate_lattice_monotone() -> None:
    lattice = rates.rate_lattice(RateInputs(M=1.0, R=1.0, a0=1.0, C0=1.0))
    assert len(lattice) == 27
    assert list(lattice.columns) == ["M", "R", "C0", "T", "delta", "gamma"]
    assert rates.lattice_is_monotone(lattice)


def test_lattice_is_monotone_detects_violation() -> None:
    lattice = rates.rate_lattice(RateInputs(M=1.0, R=1.0, a0=1.0, C0=1.0))
    lattice.loc[(lattice["M"] == 3.0) & (lattice["R"] == 1.0) & (lattice["C0"] == 1.0), "gamma"] = 1.0
    assert not rates.lattice_is_monotone(lattice)


# =============================================================================
# FITS
# =============================================================================
def test_fit_decay_rate_recovers_exponential() -> None:
    t = np.linspace(0.0, 10.0, 101)
    hist = synthetic_history(t, 3.0 * np.exp(-0.25 * t))
    fit = rates.fit_decay_rate(hist)
    assert fit.gamma_fit == pytest.approx(0.25)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.t1 == pytest.approx(1.0) and fit.t2 == pytest.approx(10.0)


def test_fit_decay_rate_constant_series() -> None:
    t = np.linspace(0.0, 10.0, 101)
    fit = rates.fit_decay_rate(synthetic_history(t, np.full_like(t, 2.0)))
    assert fit.gamma_fit == 0.0
    assert fit.r_squared == 1.0


@pytest.mark.parametrize(
    "E, window, msg",
    [
        (np.exp(-np.linspace(0.0, 1.0, 8)), (None, None), "window too short"),
        (np.linspace(1.0, -1.0, 101), (None, None), "nonpositive energy"),
        (np.ones(101), (5.0, 2.0), "empty fit window"),
    ],
)
def test_fit_decay_rate_errors(E, window, msg) -> None:
    t = np.linspace(0.0, 10.0, E.size)
    with pytest.raises(HistoryRangeError) as excinfo:
        rates.fit_decay_rate(synthetic_history(t, E), *window)
    assert msg in str(excinfo.value)


def test_decrement_gate() -> None:
    t = np.linspace(0.0, 10.0, 101)
    E = np.exp(-0.1 * t)
    A = 0.5 * (1.0 - E)
    hist = synthetic_history(t, E, A)
    assert rates.decrement_gate(hist, 5.0, 0.1)
    assert not rates.decrement_gate(hist, 0.1, 0.5)
    with pytest.raises(HistoryRangeError):
        rates.decrement_gate(hist, 5.0, 0.1, start=6.0)


def test_gate_iteration_bound() -> None:
    t = np.linspace(0.0, 10.0, 101)
    E = np.exp(-0.1 * t)
    hist = synthetic_history(t, E, 0.5 * (1.0 - E))
    table = rates.gate_iteration_bound(hist, 2.0, 0.1)
    assert list(table.columns) == ["k", "t_end", "gate", "E", "bound", "holds"]
    assert len(table) == 5
    assert table["gate"].all()
    assert table["holds"].all()
