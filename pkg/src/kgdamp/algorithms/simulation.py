"""
Damped NLKG Simulation Algorithm Module.
Part of the kg-damp package.
"""

from __future__ import annotations

import logging
import typing

import numpy as np

from kgdamp.algorithms.base import BaseAlgorithm
from kgdamp.algorithms.data.problem import Problem
from kgdamp.algorithms.data.result import RunSummary, SimulationResult
from kgdamp.algorithms.data.run_params import SimulationRunParams
from kgdamp.functions import diagnostics, rates, stepper, variational
from kgdamp.support.errors import BracketNotFound, HistoryRangeError, NoDecayError

logger = logging.getLogger(__name__)


def _finite(value: float) -> typing.Optional[float]:
    return float(value) if np.isfinite(value) else None


# =============================================================================
# SIMULATION
# =============================================================================
class Simulation(BaseAlgorithm[SimulationRunParams, SimulationResult, Problem]):
    """
    Time integration of the damped NLKG problem with the full diagnostics pass.

    The run produces the sampled history, one diagnostics record per sample, the
    decay-rate fit (completed runs only), the equipartition residuals and, in focusing
    mode, the potential-well label of the initial data (plus the subcritical gate for
    ``exp2d``).
    """

    RunParamCls = SimulationRunParams
    ResultCls = SimulationResult

    def run(self) -> SimulationResult:
        prob = self.data
        rp = self.run_params
        grid, damper, model = prob.grid, prob.damper, prob.model

        classification = None
        exp_subcritical = None
        if prob.mode == "focusing":
            m = self._well_level(prob, rp)
            if m is not None:
                classification = self._classify(prob, m)
            if getattr(model, "kind", None) == "exp2d":
                exp_subcritical = self._exp_gate(prob, m)

        history = stepper.run(
            grid,
            damper,
            model,
            rp.scheme,
            prob.u0,
            prob.v0,
            rp.T_final,
            sample_stride=rp.sample_stride,
            progress=rp.progress,
        )
        recs = diagnostics.records(
            history, S=rp.S_cone, p=rp.p_sobolev, cone_margin=rp.cone_margin
        )
        chi_R = damper.R if rp.chi_R is None else rp.chi_R
        equip = diagnostics.equipartition_residual(history, grid, damper, model, chi_R)

        fit = None
        if not history.blowup:
            t1, t2 = rp.fit_window if rp.fit_window is not None else (None, None)
            try:
                fit = rates.fit_decay_rate(history, t1, t2)
            except HistoryRangeError as exc:
                logger.info("%s: no decay fit (%s)", self.name, exc)

        last = recs.iloc[-1]
        ratios = diagnostics.ratio_series(recs, damper, grid.N, rp.p_sobolev)
        mu, sob = ratios["mu"], ratios["sobolev_ratio"]
        summary = RunSummary(
            E0=float(history.E[0]),
            E_final=float(history.E[-1]),
            gamma_fit=None if fit is None else fit.gamma_fit,
            r_squared=None if fit is None else fit.r_squared,
            blowup=history.blowup,
            blowup_time=history.blowup_time,
            status=history.status,
            mode=prob.mode,
            classification=None if classification is None else classification.label,
            exp_subcritical=exp_subcritical,
            mor_grad=float(last["mor_grad"]),
            mor_g=float(last["mor_g"]),
            mor_damp=float(last["mor_damp"]),
            mu_ratio_final=_finite(mu.iloc[-1]),
            mu_ratio_max=_finite(mu.max()),
            sobolev_ratio_final=_finite(sob.iloc[-1]),
            sobolev_ratio_max=_finite(sob.max()),
            n_samples=history.n_samples,
        )
        return self.ResultCls(
            history=history,
            records=recs,
            fit=fit,
            classification=classification,
            equipartition=equip,
            summary=summary,
        )

    @staticmethod
    def _well_level(prob: Problem, rp: SimulationRunParams) -> typing.Optional[float]:
        if rp.m is not None:
            return rp.m
        try:
            gs = variational.shoot_ground_state(prob.model, rp.c, prob.grid.N, prob.grid)
        except (BracketNotFound, NoDecayError) as exc:
            logger.warning("no ground state for classification: %s", exc)
            return None
        return gs.m

    @staticmethod
    def _classify(prob: Problem, m: float) -> variational.Classification:
        cl = variational.classify(prob.u0, prob.v0, prob.grid, prob.model, m)
        logger.info(
            "initial data: %s (E=%.6g, K=%.6g, m=%.6g)",
            cl.label,
            cl.E_value,
            cl.K_value,
            m,
        )
        return cl

    @staticmethod
    def _exp_gate(prob: Problem, m: typing.Optional[float]) -> typing.Optional[bool]:
        if m is None:
            logger.warning("exp2d gate skipped: no potential-well level m")
            return None
        field = diagnostics.Field(u=prob.u0, v=prob.v0)
        ok = diagnostics.exp_subcritical_gate(field, prob.grid, prob.model, m)
        if ok:
            logger.info("exp2d initial data pass the subcritical gate (m=%.6g)", m)
        return ok

    def energy_identity_defect(self) -> float:
        """
        ``max_t |E(t) - E(0) + 2 A(t)| / (1 + E(0))`` of the last run.

        Raises
        ------
        ValueError
            If the algorithm has not been run.
        """
        if not self.result:
            raise ValueError(f"{self.name}: Run algorithm first")
        h = self.result.history
        return float(np.max(np.abs(h.E - h.E[0] + 2.0 * h.A_cum)) / (1.0 + abs(h.E[0])))
