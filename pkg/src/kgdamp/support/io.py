"""
Output writers.
Part of the kg-damp package.

Diagnostics series and snapshots go to CSV files that start with the versioned header
comment ``# kg-damp v1``; summaries go to sorted, indented JSON.
"""

from __future__ import annotations

import json
import logging
import os
import typing

import numpy as np
import pandas as pd

from kgdamp.functions.stepper import RunHistory

logger = logging.getLogger(__name__)

CSV_HEADER = "# kg-damp v1"
FLOAT_FORMAT = "%.17g"

PathLike = typing.Union[str, os.PathLike]


def _ensure_parent(path: PathLike) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_series_csv(df: pd.DataFrame, path: PathLike) -> str:
    """
    Write ``df`` after the header comment, floats at full precision.

    Raises
    ------
    OSError
        If the file cannot be written.
    """
    try:
        _ensure_parent(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            df.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError:
        logger.error("cannot write %s", path)
        raise
    logger.debug("wrote %d rows to %s", len(df), path)
    return os.fspath(path)


def read_series_csv(path: PathLike) -> pd.DataFrame:
    """Read a file written by :func:`write_series_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    if first != CSV_HEADER:
        raise ValueError(f"{path}: missing header {CSV_HEADER!r}, found {first!r}")
    return pd.read_csv(path, skiprows=1)


def write_json(data: typing.Dict[str, typing.Any], path: PathLike) -> str:
    try:
        _ensure_parent(path)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True, allow_nan=True)
            fh.write("\n")
    except OSError:
        logger.error("cannot write %s", path)
        raise
    return os.fspath(path)


def write_snapshots(
    history: RunHistory, directory: PathLike, stride: int = 1
) -> typing.List[str]:
    """
    Write every ``stride``-th sample as ``snapshot_<k>.csv`` with columns ``t, r, u, v``.

    ``r`` is the grid coordinate (signed on the line).
    """
    if stride < 1:
        raise ValueError("snapshot stride must be >= 1")
    os.makedirs(directory, exist_ok=True)
    x = history.grid.x
    paths = []
    for k in range(0, history.n_samples, stride):
        df = pd.DataFrame(
            {
                "t": np.full(x.size, history.t[k]),
                "r": x,
                "u": history.u[k],
                "v": history.v[k],
            }
        )
        paths.append(write_series_csv(df, os.path.join(directory, f"snapshot_{k:06d}.csv")))
    logger.info("wrote %d snapshots to %s", len(paths), directory)
    return paths
