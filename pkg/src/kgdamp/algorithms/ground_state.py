"""
Ground State Algorithms Module.
Part of the kg-damp package.
"""

from __future__ import annotations

import logging

from kgdamp.algorithms.base import BaseAlgorithm
from kgdamp.algorithms.data.problem import Problem
from kgdamp.algorithms.data.result import DichotomyResult, GroundStateResult
from kgdamp.algorithms.data.run_params import DichotomyRunParams, GroundStateRunParams
from kgdamp.functions import variational
from kgdamp.functions.grid import DamperProfile

logger = logging.getLogger(__name__)


# =============================================================================
# SHOOTING
# =============================================================================
class GroundStateShooter(BaseAlgorithm[GroundStateRunParams, GroundStateResult, Problem]):
    """
    Radial ground state of ``-Delta Q + c Q = f'(Q)`` for the focusing model of the setup.

    Only the grid and the nonlinearity of the problem are used.
    """

    RunParamCls = GroundStateRunParams
    ResultCls = GroundStateResult

    def run(self) -> GroundStateResult:
        prob = self.data
        rp = self.run_params
        if prob.mode != "focusing":
            raise ValueError(f"{self.name}: ground states exist for focusing models only")
        z_star = variational.turning_point(prob.model, rp.c)
        gs = variational.shoot_ground_state(
            prob.model,
            rp.c,
            prob.grid.N,
            prob.grid,
            rtol=rp.rtol,
            max_bisections=rp.max_bisections,
            xtol=rp.xtol,
        )
        logger.info("ground state: Q0=%.12g, m=%.10g, K=%.3e", gs.Q0, gs.m, gs.K)
        return self.ResultCls(ground_state=gs, turning_point=z_star)


# =============================================================================
# DICHOTOMY
# =============================================================================
class DichotomyProbe(BaseAlgorithm[DichotomyRunParams, DichotomyResult, Problem]):
    """
    Runs ``(kappa Q, 0)`` for each ``kappa`` and checks the potential-well dichotomy:
    data labelled ``Kplus`` exist globally and ``Kminus`` data blow up.

    The initial data of the setup are not used.
    """

    RunParamCls = DichotomyRunParams
    ResultCls = DichotomyResult

    def run(self) -> DichotomyResult:
        prob = self.data
        rp = self.run_params
        gs = variational.shoot_ground_state(prob.model, rp.c, prob.grid.N, prob.grid)
        damper = prob.damper
        if not rp.damped:
            damper = DamperProfile(M=damper.M, R=damper.R, a0=0.0, shape=damper.shape)
        table = variational.dichotomy_probe(
            prob.model,
            prob.grid,
            damper,
            rp.kappa_list,
            rp.scheme,
            rp.T_final,
            sample_stride=rp.sample_stride,
            ground_state=gs,
            c=rp.c,
            fit_window=rp.fit_window,
        )
        return self.ResultCls(table=table, ground_state=gs)
