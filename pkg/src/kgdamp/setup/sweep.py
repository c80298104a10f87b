# -*- coding: utf-8 -*-
"""
Parameter sweep setup.
Part of the kg-damp package.

A sweep runs the cross product of its axes; every cell gets its own output directory and
the coordinator alone writes the aggregate table.
"""

from __future__ import annotations

import concurrent.futures
import itertools
import logging
import os
import typing

import pandas as pd
from tqdm import tqdm

from kgdamp.setup.single import EXIT_ERROR, run_config
from kgdamp.support import io
from kgdamp.support.config import RunConfig, SweepConfig, parse_config, set_path
from kgdamp.support.errors import ConfigError
from kgdamp.support.utils.logging_handler import progress_disabled

logger = logging.getLogger(__name__)

AGGREGATE_COLUMNS = [
    "cell",
    "status",
    "exit_code",
    "E0",
    "E_final",
    "gamma_fit",
    "r_squared",
    "blowup",
    "blowup_time",
    "mor_grad",
    "mor_g",
    "mor_damp",
    "mu_ratio_final",
    "mu_ratio_max",
    "sobolev_ratio_final",
    "sobolev_ratio_max",
    "error",
]


def _run_cell(
    index: int, cfg_data: typing.Dict[str, typing.Any], out_dir: str
) -> typing.Dict[str, typing.Any]:
    """Run one cell; failures are returned as a row, never raised."""
    row: typing.Dict[str, typing.Any] = {"cell": index, "error": None}
    try:
        cfg = RunConfig.model_validate(cfg_data)
        os.makedirs(out_dir, exist_ok=True)
        result, code, _ = run_config(cfg, base_dir=out_dir)
    except Exception as exc:  # noqa: BLE001
        logger.error("cell %d failed: %s", index, exc)
        row.update(status="error", exit_code=EXIT_ERROR, error=f"{type(exc).__name__}: {exc}")
        return row
    s = result.summary
    row.update(
        status=s.status,
        exit_code=code,
        E0=s.E0,
        E_final=s.E_final,
        gamma_fit=s.gamma_fit,
        r_squared=s.r_squared,
        blowup=s.blowup,
        blowup_time=s.blowup_time,
        mor_grad=s.mor_grad,
        mor_g=s.mor_g,
        mor_damp=s.mor_damp,
        mu_ratio_final=s.mu_ratio_final,
        mu_ratio_max=s.mu_ratio_max,
        sobolev_ratio_final=s.sobolev_ratio_final,
        sobolev_ratio_max=s.sobolev_ratio_max,
    )
    return row


class SweepSetup:
    """
    Cross product of run configurations executed on a worker pool.

    Parameters
    ----------
    sweep : SweepConfig
        Base config, axes and parallelism.
    output_dir : str, optional
        Root of the cell directories and the aggregate file. Defaults to
        ``sweep.output_dir``.

    Attributes
    ----------
    cells : list of (dict, dict)
        Axis values and the config data of each cell (validated, except for the cells
        listed in ``invalid``).
    invalid : dict of int to str
        Cells whose config failed validation, with the error. They are reported as
        ``status="error"`` rows and never run.
    table : pandas.DataFrame, optional
        Aggregate table of the last :meth:`run`.
    """

    def __init__(self, sweep: SweepConfig, output_dir: typing.Optional[str] = None):
        self.sweep = sweep
        self.output_dir = output_dir or sweep.output_dir
        self.invalid: typing.Dict[int, str] = {}
        self.cells = self._expand()
        self.table: typing.Optional[pd.DataFrame] = None

    def _expand(self) -> typing.List[typing.Tuple[dict, dict]]:
        base = self.sweep.base.model_dump(mode="json")
        paths = [axis.path for axis in self.sweep.axes]
        cells = []
        for values in itertools.product(*(axis.values for axis in self.sweep.axes)):
            data = RunConfig.model_validate(base).model_dump(mode="json")
            for path, value in zip(paths, values):
                set_path(data, path, value)
            axis_values = dict(zip(paths, values))
            try:
                cfg, _ = parse_config(data)
            except ConfigError as exc:
                logger.warning(
                    "sweep cell %d %s is invalid: %s", len(cells), axis_values, exc
                )
                self.invalid[len(cells)] = f"{type(exc).__name__}: {exc}"
                cells.append((axis_values, data))
                continue
            cells.append((axis_values, cfg.model_dump(mode="json")))
        logger.info("sweep: %d cells over %s", len(cells), ", ".join(paths))
        return cells

    def cell_dir(self, index: int) -> str:
        return os.path.join(self.output_dir, f"cell_{index:04d}")

    def run(self) -> pd.DataFrame:
        """
        Run every cell and write ``aggregate.csv`` under the output directory.

        Failed cells are recorded with ``status="error"`` and the sweep continues.
        """
        rows: typing.List[typing.Dict[str, typing.Any]] = [
            {"cell": i, "status": "error", "exit_code": EXIT_ERROR, "error": error}
            for i, error in self.invalid.items()
        ]
        todo = [
            (i, data) for i, (_, data) in enumerate(self.cells) if i not in self.invalid
        ]
        workers = min(self.sweep.workers, len(todo))
        progress = tqdm(total=len(todo), desc="sweep", disable=progress_disabled())
        if workers <= 1:
            for i, data in todo:
                rows.append(_run_cell(i, data, self.cell_dir(i)))
                progress.update(1)
        else:
            logger.info("sweep: %d workers", workers)
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_run_cell, i, data, self.cell_dir(i)) for i, data in todo
                ]
                for fut in concurrent.futures.as_completed(futures):
                    rows.append(fut.result())
                    progress.update(1)
        progress.close()
        rows.sort(key=lambda row: row["cell"])
        table = pd.DataFrame(rows).reindex(columns=AGGREGATE_COLUMNS)
        axes = pd.DataFrame([axis_values for axis_values, _ in self.cells])
        self.table = pd.concat([axes, table], axis=1)
        io.write_series_csv(self.table, os.path.join(self.output_dir, "aggregate.csv"))
        n_err = int((self.table["status"] == "error").sum())
        if n_err:
            logger.warning("sweep: %d of %d cells failed", n_err, len(self.cells))
        return self.table

    @property
    def exit_code(self) -> int:
        """1 if any cell errored, 2 if any blew up, 0 otherwise."""
        if self.table is None:
            raise ValueError("Run the sweep first")
        codes = set(self.table["exit_code"].astype(int))
        if EXIT_ERROR in codes:
            return EXIT_ERROR
        return max(codes) if codes else 0
