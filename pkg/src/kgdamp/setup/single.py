# -*- coding: utf-8 -*-
"""
Single problem setup.
Part of the kg-damp package.
"""

from __future__ import annotations

import copy
import logging
import os
import typing

import numpy as np

from kgdamp.algorithms.data.problem import Problem
from kgdamp.algorithms.data.run_params import SimulationRunParams
from kgdamp.algorithms.simulation import Simulation
from kgdamp.functions import grid as grid_fn
from kgdamp.functions import variational
from kgdamp.setup.base import BaseSetup
from kgdamp.support import io

if typing.TYPE_CHECKING:
    from kgdamp.algorithms import BaseAlgorithm
    from kgdamp.algorithms.data.result import SimulationResult
    from kgdamp.support.config import InitialDataConfig, RunConfig


logger = logging.getLogger(__name__)

SIMULATION = "simulation"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2


# =============================================================================
# INITIAL DATA
# =============================================================================
def build_initial_data(
    idata: InitialDataConfig, grid: grid_fn.Grid, model
) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    Initial position and velocity described by ``idata``.

    ``gaussian`` is ``A exp(-((x - center)/width)^2)``; ``bump`` is the compactly
    supported ``A exp(1 - 1/(1 - s^2))`` for ``|s| < 1``, ``s = (x - center)/width``;
    ``ground_state_multiple`` is ``kappa Q`` with ``Q`` shot for mass constant ``c``;
    ``eigenmode`` is ``A phi_k`` for the ``k``-th discrete Dirichlet eigenfunction. In every
    case the velocity has the same profile scaled by ``velocity_amplitude`` (relative to
    the unscaled profile).
    """
    x = grid.x
    if idata.kind == "gaussian":
        shape = np.exp(-(((x - idata.center) / idata.width) ** 2))
        u0 = idata.amplitude * shape
    elif idata.kind == "bump":
        s = (x - idata.center) / idata.width
        inside = np.abs(s) < 1.0
        shape = np.zeros_like(x)
        shape[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        u0 = idata.amplitude * shape
    elif idata.kind == "ground_state_multiple":
        gs = variational.shoot_ground_state(model, idata.c, grid.N, grid)
        shape = gs.Q
        u0 = idata.kappa * shape
    else:
        _, shape = grid_fn.dirichlet_eigenmode(grid, idata.eigen_index)
        u0 = idata.amplitude * shape
    v0 = idata.velocity_amplitude * shape
    return grid.apply_dirichlet(u0), grid.apply_dirichlet(v0)


# =============================================================================
# SETUP
# =============================================================================
class SingleSetup(BaseSetup):
    """
    Setup holding one damped NLKG problem.

    Parameters
    ----------
    problem : Problem
        Grid, damper, nonlinearity and initial data.

    Attributes
    ----------
    problem : Problem
        The current problem; :meth:`set_initial_data` replaces its data and
        :meth:`rollback` restores the original.
    algorithms : Dict[str, BaseAlgorithm]
        Algorithms added to the setup.
    config : RunConfig, optional
        The configuration the setup was built from, if any.
    """

    algorithms: typing.Dict[str, BaseAlgorithm]

    def __init__(self, problem: Problem, config: typing.Optional[RunConfig] = None):
        self.problem = problem
        self.config = config
        self._initialize_data(problem=problem)

    def _initialize_data(self, problem: Problem) -> None:
        self._initial_problem = copy.deepcopy(problem)
        self.algorithms: typing.Dict[str, BaseAlgorithm] = {}

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "SingleSetup":
        """
        Build the problem described by ``cfg`` and register a :class:`Simulation` named
        ``"simulation"`` with the run parameters of ``cfg``.
        """
        grid = cfg.build_grid()
        model = cfg.build_model()
        u0, v0 = build_initial_data(cfg.initial_data, grid, model)
        problem = Problem(grid=grid, damper=cfg.build_damper(), model=model, u0=u0, v0=v0)
        setup = cls(problem, config=cfg)
        diag = cfg.diagnostics
        run_params = SimulationRunParams(
            scheme=cfg.build_scheme(),
            T_final=cfg.time.T_final,
            sample_stride=cfg.time.stride,
            S_cone=diag.S_cone,
            p_sobolev=diag.p_sobolev,
            cone_margin=diag.cone_margin,
            chi_R=diag.chi_R,
            fit_window=diag.fit_window,
            m=cfg.initial_data.m,
            c=cfg.initial_data.c,
        )
        setup.add_algorithms(Simulation(run_params=run_params, name=SIMULATION))
        return setup

    def rollback(self) -> None:
        """Restore the problem given at construction and re-attach it to the algorithms."""
        self.problem = copy.deepcopy(self._initial_problem)
        for alg in self.algorithms.values():
            alg._set_data(self.problem)

    def set_initial_data(self, u0: np.ndarray, v0: np.ndarray) -> None:
        """Replace the initial data of the problem for every registered algorithm."""
        self.problem = self.problem.with_initial_data(u0, v0)
        for alg in self.algorithms.values():
            alg._set_data(self.problem)

    def write_outputs(
        self,
        name: str = SIMULATION,
        base_dir: typing.Optional[str] = None,
        snapshots: bool = False,
    ) -> typing.Dict[str, str]:
        """
        Write the diagnostics CSV and the JSON summary of a finished simulation.

        Output paths come from the setup's config (defaults ``diagnostics.csv`` and
        ``summary.json``); relative paths are resolved against ``base_dir`` when given.
        Snapshots go to ``snapshot_dir`` every ``snapshot_stride`` samples when
        ``snapshots`` is True or the config sets a snapshot stride.

        Returns
        -------
        dict
            Written paths keyed by ``csv``, ``summary`` and ``snapshots``.
        """
        result: SimulationResult = self[name].result
        if result is None:
            raise ValueError(f"{name}: Run algorithm first")
        out = self.config.outputs if self.config is not None else None

        def _resolve(path: str) -> str:
            if base_dir is None or os.path.isabs(path):
                return path
            return os.path.join(base_dir, path)

        csv_path = _resolve(out.csv_path if out else "diagnostics.csv")
        summary_path = _resolve(out.summary_path if out else "summary.json")
        paths = {
            "csv": io.write_series_csv(result.records, csv_path),
            "summary": io.write_json(result.summary.to_json_dict(), summary_path),
        }
        stride = out.snapshot_stride if out else None
        if snapshots or stride is not None:
            snap_dir = _resolve(out.snapshot_dir if out else "snapshots")
            io.write_snapshots(result.history, snap_dir, stride or 1)
            paths["snapshots"] = snap_dir
        return paths


def run_config(
    cfg: RunConfig, base_dir: typing.Optional[str] = None, snapshots: bool = False
) -> typing.Tuple[SimulationResult, int, typing.Dict[str, str]]:
    """
    Run the simulation described by ``cfg`` and write its outputs.

    Returns
    -------
    result : SimulationResult
        The simulation result.
    exit_code : int
        0 for a completed run, 2 for a detected blowup.
    paths : dict
        Written output paths.
    """
    setup = SingleSetup.from_config(cfg)
    setup.run_by_name(SIMULATION)
    paths = setup.write_outputs(SIMULATION, base_dir=base_dir, snapshots=snapshots)
    result = setup[SIMULATION].result
    code = EXIT_BLOWUP if result.summary.blowup else EXIT_OK
    return result, code, paths
