from __future__ import annotations

import json
import typing

import numpy as np
import pytest
from kgdamp.functions.grid import DamperProfile, Grid
from kgdamp.functions.variational import GroundState, shoot_ground_state
from kgdamp.setup import SingleSetup

from .factory import (
    FakeAlgorithm,
    FakeAlgorithm2,
    FakeResult,
    FakeRunParams,
    gaussian_problem,
    half_quartic_focusing,
    run_config_dict,
)

if typing.TYPE_CHECKING:
    from kgdamp.algorithms.data.problem import Problem


@pytest.fixture(autouse=True)
def _quiet_progress(monkeypatch) -> None:
    monkeypatch.setenv("KGDAMP_DISABLE_TQDM", "1")


@pytest.fixture(scope="session")
def fake_algorithm_no_param_fixture() -> typing.Generator[FakeAlgorithm, None, None]:
    """Fixture for FakeAlgorithm without parameters."""
    yield FakeAlgorithm()


@pytest.fixture(scope="session")
def fake_algorithm_with_param_fixture() -> typing.Generator[FakeAlgorithm, None, None]:
    """Fixture for FakeAlgorithm with parameters."""
    yield FakeAlgorithm(run_params=FakeRunParams())


@pytest.fixture(scope="session")
def fake_ran_algorithm() -> typing.Generator[FakeAlgorithm, None, None]:
    """Fixture for FakeAlgorithm that has been run."""
    fa = FakeAlgorithm()
    fa.result = FakeResult()
    yield fa


@pytest.fixture(scope="session")
def line_grid() -> Grid:
    """Whole line [-20, 20], dr = 0.1."""
    return Grid(N=1, L=20.0, dr=0.1, geometry="line")


@pytest.fixture(scope="session")
def fine_line_grid() -> Grid:
    """Whole line [-40, 40], dr = 0.01, for quadrature checks against analytic integrals."""
    return Grid(N=1, L=40.0, dr=0.01, geometry="line")


@pytest.fixture(scope="session")
def radial_grid() -> Grid:
    """N = 3 ball of radius 10, dr = 0.05."""
    return Grid(N=3, L=10.0, dr=0.05, geometry="radial")


@pytest.fixture(scope="session")
def exterior_damper() -> DamperProfile:
    return DamperProfile(M=1.0, R=5.0, a0=1.0, shape="smoothstep", width=1.0)


@pytest.fixture(scope="session")
def no_damper() -> DamperProfile:
    return DamperProfile(a0=0.0)


@pytest.fixture(scope="session")
def sech_ground_state() -> typing.Tuple[Grid, GroundState]:
    """Ground state of the focusing ``f = u^4/2`` on the line, ``c = 1``."""
    grid = Grid(N=1, L=20.0, dr=0.05, geometry="line")
    return grid, shoot_ground_state(half_quartic_focusing(), 1.0, 1, grid)


@pytest.fixture(scope="function")
def problem(line_grid, exterior_damper) -> "Problem":
    return gaussian_problem(line_grid, damper=exterior_damper)


@pytest.fixture(scope="function")
def config_file(tmp_path) -> typing.Callable[..., str]:
    """Write a run configuration (factory defaults plus overrides) and return its path."""

    def _write(name: str = "config.json", **overrides: typing.Any) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(run_config_dict(**overrides)))
        return str(path)

    return _write


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture(scope="function")
def fake_single_setup_fixture_no_param(line_grid) -> SingleSetup:
    """SingleSetup holding two FakeAlgorithms without run parameters."""
    ss = SingleSetup(gaussian_problem(line_grid))
    ss.add_algorithms(FakeAlgorithm(name="one"), FakeAlgorithm2(name="two"))
    return ss


@pytest.fixture(scope="function")
def fake_single_setup_fixture_with_param(line_grid) -> SingleSetup:
    """SingleSetup holding two FakeAlgorithms with run parameters."""
    ss = SingleSetup(gaussian_problem(line_grid))
    ss.add_algorithms(
        FakeAlgorithm(run_params=FakeRunParams(), name="one"),
        FakeAlgorithm2(run_params=FakeRunParams(param1=2), name="two"),
    )
    return ss
