import json
import os

import numpy as np
import pandas as pd
import pytest
from kgdamp.functions import stepper
from kgdamp.functions.grid import DamperProfile, Grid
from kgdamp.support import io

from ...factory import quartic


@pytest.fixture(scope="module")
def short_history() -> stepper.RunHistory:
    grid = Grid(N=1, L=5.0, dr=0.1, geometry="line")
    u0 = np.exp(-(grid.x**2))
    return stepper.run(
        grid,
        DamperProfile(R=2.0),
        quartic(),
        stepper.SchemeConfig(dt=0.05),
        u0,
        np.zeros_like(u0),
        0.5,
        progress=False,
    )


def test_series_csv_header_and_precision(tmp_path) -> None:
    df = pd.DataFrame({"t": [0.0, 1.0 / 3.0], "E": [np.pi, 1e-300]})
    path = io.write_series_csv(df, tmp_path / "sub" / "series.csv")
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == io.CSV_HEADER
    assert lines[1] == "t,E"
    back = io.read_series_csv(path)
    assert back["t"].iloc[1] == 1.0 / 3.0
    assert back["E"].iloc[0] == np.pi


def test_read_series_csv_missing_header(tmp_path) -> None:
    path = tmp_path / "plain.csv"
    path.write_text("t,E\n0,1\n")
    with pytest.raises(ValueError) as excinfo:
        io.read_series_csv(path)
    assert "missing header" in str(excinfo.value)


def test_write_json_sorted(tmp_path) -> None:
    path = io.write_json({"b": 1, "a": None}, tmp_path / "summary.json")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": None, "b": 1}


def test_write_snapshots(tmp_path, short_history) -> None:
    paths = io.write_snapshots(short_history, tmp_path / "snaps", stride=4)
    assert short_history.n_samples == 11
    assert [os.path.basename(p) for p in paths] == [
        "snapshot_000000.csv",
        "snapshot_000004.csv",
        "snapshot_000008.csv",
    ]
    snap = io.read_series_csv(paths[1])
    assert list(snap.columns) == ["t", "r", "u", "v"]
    assert len(snap) == short_history.grid.nodes
    assert snap["t"].iloc[0] == pytest.approx(short_history.t[4])
    np.testing.assert_allclose(snap["u"], short_history.u[4])


def test_write_snapshots_bad_stride(tmp_path, short_history) -> None:
    with pytest.raises(ValueError):
        io.write_snapshots(short_history, tmp_path, stride=0)
