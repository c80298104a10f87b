import typing

import numpy as np
import pytest
from kgdamp.algorithms import (
    BaseAlgorithm,
    DichotomyProbe,
    GroundStateShooter,
    Simulation,
    SimulationRunParams,
)
from kgdamp.algorithms.data.problem import Problem
from kgdamp.algorithms.data.result import RunSummary
from kgdamp.algorithms.data.run_params import BaseRunParams
from kgdamp.functions.grid import DamperProfile, Grid
from kgdamp.functions.stepper import SchemeConfig
from kgdamp.setup import SingleSetup

from ..factory import (
    FakeAlgorithm,
    FakeResult,
    FakeRunParams,
    gaussian_problem,
    half_quartic_focusing,
)


def test_child_algo_must_define_run_param_cls():
    """
    Check that a subclass of BaseAlgorithm must define RunParamCls
    """
    with pytest.raises(ValueError) as excinfo:

        class MyClass(BaseAlgorithm):
            def run(self):
                return super().run()

    assert "RunParamCls must be defined in subclasses of BaseAlgorithm" in str(
        excinfo.value
    )


def test_run_param_cls_is_subclass_of_base_run_params():
    """
    Check that RunParamCls must be a subclass of BaseRunParams
    """
    with pytest.raises(ValueError) as excinfo:

        class MyClass(BaseAlgorithm):
            RunParamCls = object

            def run(self):
                return super().run()

    assert "RunParamCls must be defined in subclasses of BaseAlgorithm" in str(
        excinfo.value
    )


def test_child_algo_must_define_result_cls():
    """
    Check that a subclass of BaseAlgorithm must define ResultCls
    """
    with pytest.raises(ValueError) as excinfo:

        class MyClass(BaseAlgorithm):
            RunParamCls = BaseRunParams

            def run(self):
                return super().run()

    assert "ResultCls must be defined in subclasses of BaseAlgorithm" in str(
        excinfo.value
    )


def test_parametrized_base_is_a_generic_alias():
    """
    Check that subscripting BaseAlgorithm keeps the type arguments and leaves it alone
    """
    alias = BaseAlgorithm[FakeRunParams, FakeResult, Problem]
    assert typing.get_args(alias) == (FakeRunParams, FakeResult, Problem)
    assert typing.get_origin(alias) is BaseAlgorithm
    assert "RunParamCls" not in vars(BaseAlgorithm)
    assert FakeAlgorithm(param1=3).run_params == FakeRunParams(param1=3)


def test_result_cls_is_subclass_of_base_result():
    """
    Check that ResultCls must be a subclass of BaseResult
    """
    with pytest.raises(ValueError) as excinfo:

        class MyClass(BaseAlgorithm):
            RunParamCls = BaseRunParams
            ResultCls = object

            def run(self):
                return super().run()

    assert "ResultCls must be defined in subclasses of BaseAlgorithm" in str(
        excinfo.value
    )


def test_kwargs_build_run_params():
    alg = FakeAlgorithm(param1=7)
    assert isinstance(alg.run_params, FakeRunParams)
    assert alg.run_params.param1 == 7
    assert alg.name == "FakeAlgorithm"


def test_pre_run_needs_problem():
    with pytest.raises(ValueError) as excinfo:
        FakeAlgorithm(run_params=FakeRunParams())._pre_run()
    assert "the problem must be set" in str(excinfo.value)


def test_run_cant_be_called_without_run_param(
    fake_single_setup_fixture_no_param: SingleSetup,
):
    """
    Check that run can't be called without setting run_params
    """
    with pytest.raises(ValueError) as excinfo:
        fake_single_setup_fixture_no_param.run_all()

    assert (
        "Run parameters must be set before running the algorithm, use a Setup class to run it"
        in str(excinfo.value)
    )


def test_result_from_setup(fake_single_setup_fixture_with_param: SingleSetup):
    """
    Check that result is not none after run with the setupclass or after call set_result
    """
    assert all(
        [
            algo.result is None
            for algo in fake_single_setup_fixture_with_param.algorithms.values()
        ]
    )
    fake_single_setup_fixture_with_param.run_all()
    assert all(
        [
            algo.result is not None
            for algo in fake_single_setup_fixture_with_param.algorithms.values()
        ]
    )


# =============================================================================
# SIMULATION
# =============================================================================
def _simulation(T_final: float = 2.0, **kwargs) -> Simulation:
    return Simulation(
        name="sim",
        run_params=SimulationRunParams(
            scheme=SchemeConfig(dt=0.05), T_final=T_final, progress=False, **kwargs
        ),
    )


def test_simulation_result(problem):
    ss = SingleSetup(problem)
    ss.add_algorithms(_simulation())
    ss.run_by_name("sim")
    res = ss["sim"].result
    assert res.history.n_samples == 41
    assert len(res.records) == 41
    assert res.classification is None
    assert res.fit is not None
    s = res.summary
    assert s.E0 == pytest.approx(res.history.E[0])
    assert s.E_final == pytest.approx(res.history.E[-1])
    assert s.n_samples == 41
    assert not s.blowup and s.status == "completed"
    assert "classification" not in s.to_json_dict()
    assert ss["sim"].energy_identity_defect() <= 1e-8


def test_simulation_short_run_has_no_fit(problem):
    ss = SingleSetup(problem)
    ss.add_algorithms(_simulation(T_final=0.2))
    ss.run_by_name("sim")
    res = ss["sim"].result
    assert res.fit is None
    assert res.summary.gamma_fit is None


def test_energy_identity_defect_needs_run():
    with pytest.raises(ValueError) as excinfo:
        _simulation().energy_identity_defect()
    assert "Run algorithm first" in str(excinfo.value)


def test_simulation_classifies_focusing_data():
    grid = Grid(N=1, L=20.0, dr=0.05, geometry="line")
    prob = gaussian_problem(grid, model=half_quartic_focusing(), amplitude=0.5)
    ss = SingleSetup(prob)
    ss.add_algorithms(_simulation(T_final=0.5, m=4.0 / 3.0))
    ss.run_by_name("sim")
    res = ss["sim"].result
    assert res.classification.label == "Kplus"
    assert res.summary.classification == "Kplus"
    assert res.summary.to_json_dict()["classification"] == "Kplus"
    assert res.summary.exp_subcritical is None


def test_run_summary_json_dict():
    s = RunSummary(E0=1.0, E_final=0.5, mode="focusing", classification="Kminus")
    data = s.to_json_dict()
    assert data["classification"] == "Kminus"
    assert set(data) >= {"E0", "E_final", "gamma_fit", "blowup", "status", "mode"}
    assert "exp_subcritical" not in data
    gated = RunSummary(E0=0.1, E_final=0.1, mode="focusing", exp_subcritical=False)
    assert gated.to_json_dict()["exp_subcritical"] is False


# =============================================================================
# GROUND STATE
# =============================================================================
def test_ground_state_shooter(sech_ground_state):
    grid, _ = sech_ground_state
    zeros = np.zeros(grid.nodes)
    prob = Problem(
        grid=grid, damper=DamperProfile(), model=half_quartic_focusing(), u0=zeros, v0=zeros
    )
    ss = SingleSetup(prob)
    ss.add_algorithms(GroundStateShooter(name="gs", c=1.0))
    ss.run_by_name("gs")
    res = ss["gs"].result
    assert res.turning_point == pytest.approx(1.0)
    assert res.ground_state.m == pytest.approx(4.0 / 3.0, abs=1e-4)


def test_ground_state_shooter_rejects_defocusing(problem):
    ss = SingleSetup(problem)
    ss.add_algorithms(GroundStateShooter(name="gs", c=1.0))
    with pytest.raises(ValueError) as excinfo:
        ss.run_by_name("gs")
    assert "focusing models only" in str(excinfo.value)


def test_dichotomy_probe_undamped():
    grid = Grid(N=1, L=20.0, dr=0.05, geometry="line")
    prob = gaussian_problem(grid, model=half_quartic_focusing(), damper=DamperProfile())
    ss = SingleSetup(prob)
    ss.add_algorithms(
        DichotomyProbe(
            name="dich",
            scheme=SchemeConfig(dt=0.05),
            kappa_list=[0.5],
            T_final=1.0,
            damped=False,
        )
    )
    ss.run_by_name("dich")
    res = ss["dich"].result
    assert list(res.table["label"]) == ["Kplus"]
    assert res.all_consistent
