import json
import os

import numpy as np
import pytest
from kgdamp.functions import diagnostics
from kgdamp.setup import SingleSetup, run_config
from kgdamp.setup.single import EXIT_BLOWUP, EXIT_OK, SIMULATION
from kgdamp.support import io
from kgdamp.support.config import parse_config

from ...factory import run_config_dict


def test_single_setup_workflow(tmp_path) -> None:
    """Build from config, run, swap the initial data, roll back and write outputs."""
    cfg, _ = parse_config(run_config_dict())
    ss = SingleSetup.from_config(cfg)
    u_orig = ss.problem.u0.copy()

    ss.run_by_name(SIMULATION)
    first = ss[SIMULATION].result
    assert first.summary.n_samples == 21
    assert first.summary.E_final < first.summary.E0
    assert ss[SIMULATION].energy_identity_defect() <= 1e-8

    ss.set_initial_data(0.5 * u_orig, np.zeros_like(u_orig))
    ss.run_by_name(SIMULATION)
    second = ss[SIMULATION].result
    assert second.summary.E0 < first.summary.E0

    ss.rollback()
    np.testing.assert_allclose(ss.problem.u0, u_orig)
    ss.run_by_name(SIMULATION)
    assert ss[SIMULATION].result.summary.E0 == pytest.approx(first.summary.E0)

    paths = ss.write_outputs(base_dir=str(tmp_path))
    assert paths["csv"] == os.path.join(str(tmp_path), "diagnostics.csv")
    assert "snapshots" not in paths


def test_run_config_outputs(tmp_path) -> None:
    cfg, _ = parse_config(run_config_dict(outputs={"snapshot_stride": 5}))
    result, code, paths = run_config(cfg, base_dir=str(tmp_path))
    assert code == EXIT_OK

    records = io.read_series_csv(paths["csv"])
    assert list(records.columns) == diagnostics.RECORD_COLUMNS
    assert len(records) == 21
    np.testing.assert_allclose(records["E"], result.history.E, rtol=1e-15)

    with open(paths["summary"], encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["status"] == "completed"
    assert summary["blowup"] is False
    assert summary["E0"] == result.summary.E0
    assert "classification" not in summary

    snaps = sorted(os.listdir(paths["snapshots"]))
    assert snaps == [f"snapshot_{k:06d}.csv" for k in (0, 5, 10, 15, 20)]


def test_run_config_custom_paths(tmp_path) -> None:
    cfg, _ = parse_config(
        run_config_dict(outputs={"csv_path": "out/d.csv", "summary_path": "out/s.json"})
    )
    _, _, paths = run_config(cfg, base_dir=str(tmp_path), snapshots=True)
    assert os.path.isfile(tmp_path / "out" / "d.csv")
    assert os.path.isfile(tmp_path / "out" / "s.json")
    assert len(os.listdir(paths["snapshots"])) == 21


def test_focusing_summary_has_classification(tmp_path) -> None:
    cfg, _ = parse_config(
        run_config_dict(
            mode="focusing",
            initial_data={"amplitude": 0.3, "m": 1.0},
            time={"T_final": 1.0},
        )
    )
    result, code, paths = run_config(cfg, base_dir=str(tmp_path))
    assert code == EXIT_OK
    with open(paths["summary"], encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["classification"] == "Kplus"
    assert summary["mode"] == "focusing"
    assert result.classification.m_used == 1.0



def test_summary_ratios(tmp_path) -> None:
    cfg, _ = parse_config(run_config_dict(diagnostics={"S_cone": 1.0}))
    result, _, paths = run_config(cfg, base_dir=str(tmp_path))
    with open(paths["summary"], encoding="utf-8") as fh:
        summary = json.load(fh)
    history, s = result.history, result.summary
    E0 = float(history.E[0])

    mu = diagnostics.mu_ratio(float(history.A_cum[-1]), E0, 1.0, 2.0, 1.0, 2.0)
    assert summary["mu_ratio_final"] == pytest.approx(mu)
    assert summary["mu_ratio_max"] == pytest.approx(mu)

    ratio = diagnostics.weighted_sobolev_ratio(history, history.grid, 1.0, 2.0, 6.0, E0)
    assert ratio > 0.0
    assert s.sobolev_ratio_final == pytest.approx(ratio, rel=1e-9)
    assert s.sobolev_ratio_max >= s.sobolev_ratio_final
    assert summary["sobolev_ratio_max"] == s.sobolev_ratio_max
    assert "exp_subcritical" not in summary


def test_summary_mu_ratio_undefined_without_damping(tmp_path) -> None:
    cfg, _ = parse_config(run_config_dict(damper={"a0": 0.0}))
    result, _, _ = run_config(cfg, base_dir=str(tmp_path))
    assert result.summary.mu_ratio_final is None
    assert result.summary.mu_ratio_max is None


@pytest.mark.parametrize("m, passes", [(1.0, True), (1.5, False)])
def test_exp2d_focusing_gate(tmp_path, caplog, m, passes) -> None:
    cfg, _ = parse_config(
        run_config_dict(
            geometry={"N": 2, "L": 10.0, "dr": 0.1},
            nonlinearity={"kind": "exp2d"},
            mode="focusing",
            initial_data={"amplitude": 0.1, "m": m},
            time={"T_final": 1.0},
        )
    )
    result, code, paths = run_config(cfg, base_dir=str(tmp_path))
    assert code == EXIT_OK
    assert result.summary.exp_subcritical is passes
    with open(paths["summary"], encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["exp_subcritical"] is passes
    assert ("subcritical exponential gate fails" in caplog.text) is not passes


@pytest.mark.slow
def test_blowup_exit_code(tmp_path) -> None:
    cfg, _ = parse_config(
        run_config_dict(
            geometry={"L": 10.0, "dr": 0.05},
            damper={"a0": 0.0},
            mode="focusing",
            initial_data={"amplitude": 3.0, "m": 1.0},
            time={"dt": 0.01, "T_final": 2.0, "sample_stride": 10},
        )
    )
    result, code, paths = run_config(cfg, base_dir=str(tmp_path))
    assert code == EXIT_BLOWUP
    assert result.summary.blowup
    assert result.fit is None
    with open(paths["summary"], encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["blowup"] is True
    assert summary["blowup_time"] < 2.0
    assert summary["classification"] == "Kminus"
