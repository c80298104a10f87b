import json
import math
import os

import pytest
from kgdamp import __version__
from kgdamp.cli import build_parser, main
from kgdamp.support import io

from ..factory import run_config_dict


def _write(path, data) -> str:
    path.write_text(json.dumps(data))
    return str(path)


def test_version(capsys) -> None:
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert f"kg-damp {__version__}" in capsys.readouterr().out


def test_command_is_required() -> None:
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args([])
    assert excinfo.value.code == 2


# =============================================================================
# RUN / SWEEP
# =============================================================================
def test_run(tmp_path, config_file) -> None:
    out = tmp_path / "out"
    code = main(["run", config_file(), "--output-dir", str(out), "--snapshots"])
    assert code == 0
    assert os.path.isfile(out / "diagnostics.csv")
    assert os.path.isfile(out / "summary.json")
    assert len(os.listdir(out / "snapshots")) == 21


@pytest.mark.parametrize(
    "overrides",
    [
        {"time": {"dt": 0.5}},
        {"geometry": {"unknown": 1}},
        {"initial_data": {"kind": "ground_state_multiple"}},
    ],
)
def test_run_invalid_config(tmp_path, config_file, overrides) -> None:
    assert main(["run", config_file(**overrides), "--output-dir", str(tmp_path)]) == 1
    assert not os.path.exists(tmp_path / "summary.json")


def test_run_missing_file(tmp_path) -> None:
    assert main(["run", str(tmp_path / "absent.json")]) == 1


def test_run_syntax_error(tmp_path, caplog) -> None:
    path = tmp_path / "broken.json"
    path.write_text('{"geometry": {"N": 1,}}')
    assert main(["run", str(path)]) == 1
    assert "parse error at line 1" in caplog.text


def test_sweep(tmp_path) -> None:
    sweep = _write(
        tmp_path / "sweep.json",
        {"base": run_config_dict(), "axes": [{"path": "damper.a0", "values": [0.5, 1.0]}]},
    )
    out = tmp_path / "sweep_out"
    assert main(["sweep", sweep, "--output-dir", str(out), "--workers", "1"]) == 0
    aggregate = io.read_series_csv(out / "aggregate.csv")
    assert list(aggregate["damper.a0"]) == [0.5, 1.0]


# =============================================================================
# RATE
# =============================================================================
def test_rate(tmp_path, capsys) -> None:
    inputs = _write(tmp_path / "rate.json", {"M": 1.0, "R": 1.0, "a0": 1.0, "C0": 1.0})
    assert main(["rate", inputs]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["T"] == pytest.approx(math.exp(3.0))
    assert out["delta"] == pytest.approx(0.0226395, rel=1e-5)
    assert out["regime"] == "condition_f"
    assert "lattice_monotone" not in out


def test_rate_lattice(tmp_path, capsys) -> None:
    inputs = _write(tmp_path / "rate.json", {"M": 1.0, "R": 1.0, "a0": 1.0, "C0": 1.0})
    lattice = tmp_path / "lattice.csv"
    assert main(["rate", inputs, "--lattice", "--output", str(lattice)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["lattice_monotone"] is True
    assert len(io.read_series_csv(lattice)) == 27


def test_rate_invalid_inputs(tmp_path) -> None:
    inputs = _write(tmp_path / "rate.json", {"M": 0.0, "R": 1.0, "a0": 1.0, "C0": 1.0})
    assert main(["rate", inputs]) == 1


# =============================================================================
# GROUND STATE / TRUNCATION
# =============================================================================
def test_ground_state(tmp_path, capsys) -> None:
    model = _write(
        tmp_path / "model.json",
        {
            "geometry": {"N": 1, "L": 20.0, "dr": 0.05},
            "nonlinearity": {"kind": "power_sum", "coefficients": [[0.5, 4.0]]},
            "c": 1.0,
        },
    )
    profile = tmp_path / "Q.csv"
    assert main(["ground-state", model, "--output", str(profile)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["Q0"] == pytest.approx(1.0, abs=1e-8)
    assert out["m"] == pytest.approx(4.0 / 3.0, abs=1e-4)
    assert out["turning_point"] == pytest.approx(1.0)
    table = io.read_series_csv(profile)
    assert list(table.columns) == ["r", "Q"]


def test_ground_state_rejects_defocusing(tmp_path) -> None:
    model = _write(
        tmp_path / "model.json",
        {"mode": "defocusing", "nonlinearity": {"kind": "power_sum", "coefficients": [[1.0, 4.0]]}},
    )
    assert main(["ground-state", model]) == 1


def test_truncate(tmp_path, capsys) -> None:
    model = _write(
        tmp_path / "model.json",
        {"nonlinearity": {"kind": "power_sum", "coefficients": [[1.0, 4.0]]}},
    )
    table_path = tmp_path / "trunc.csv"
    args = ["truncate", model, "--theta", "0.5", "--k", "1", "--l", "4", "--output", str(table_path)]
    assert main(args) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["l"] == 4.0
    assert out["f_monotone_in_k"] is True
    assert math.isfinite(out["lipschitz_ratio"])
    table = io.read_series_csv(table_path)
    assert len(table) == 201
    assert "f_kl" in table.columns


def test_truncate_exp2d(tmp_path, capsys, caplog) -> None:
    model = _write(tmp_path / "model.json", {"nonlinearity": {"kind": "exp2d"}})
    table_path = tmp_path / "trunc.csv"
    args = ["truncate", model, "--k", "1", "--l", "4", "--output", str(table_path)]
    assert main(args) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["f_monotone_in_k"] is True
    assert math.isfinite(out["lipschitz_ratio"])
    assert out["v_dominance"] <= 2.0
    table = io.read_series_csv(table_path)
    assert table["f"].isna().any()
    assert table["f_kl"].notna().all()

    assert main(["truncate", model, "--k", "6"]) == 1
    assert "evaluable range" in caplog.text


def test_truncate_rejects_truncated_model(tmp_path) -> None:
    model = _write(
        tmp_path / "model.json",
        {"nonlinearity": {"kind": "power_sum", "truncation": {"theta": 0.5, "k": 1.0}}},
    )
    assert main(["truncate", model]) == 1


# =============================================================================
# CHECK
# =============================================================================
def test_check_list(capsys) -> None:
    assert main(["check", "--list"]) == 0
    names = capsys.readouterr().out.split()
    assert len(names) == 8
    assert "reversibility" in names


def test_check_filter(capsys) -> None:
    assert main(["check", "--filter", "rate"]) == 0
    out = capsys.readouterr().out
    assert "rate_formula" in out and "PASS" in out


def test_check_empty_filter(capsys) -> None:
    assert main(["check", "--filter", "nothing"]) == 0
    assert "no checks selected" in capsys.readouterr().out


@pytest.mark.slow
def test_check_without_difference_quotient_fails(capsys) -> None:
    code = main(["check", "--filter", "energy_identity_line", "--disable-sv-quotient"])
    assert code == 1
    assert "FAIL" in capsys.readouterr().out
