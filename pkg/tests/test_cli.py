import json

import pytest

from fiberloop.cli import main
from fiberloop.config import cwdmf_preset, save_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_preset(capsys):
    code, out, _ = run(capsys, "validate-config", "--config", "dgfawg")
    assert code == 0
    assert json.loads(out)["warnings"] == []


def test_validate_file_with_unknown_key(capsys, tmp_path):
    path = tmp_path / "cfg.json"
    save_config(cwdmf_preset(), path)
    d = json.loads(path.read_text())
    d["colour"] = "blue"
    path.write_text(json.dumps(d))
    code, _, err = run(capsys, "validate-config", "--config", str(path))
    assert code != 0
    assert json.loads(err)["error"] == "InvalidConfigurationError"


def test_calibrate(capsys):
    code, out, _ = run(capsys, "calibrate", "0.1,0.024,0.024")
    assert code == 0
    assert json.loads(out)["coefficients"]["c_fps_per_mw2"] == pytest.approx(2.4)


def test_calibrate_bad_target(capsys):
    code, _, err = run(capsys, "calibrate", "0.1,0.02")
    assert code != 0
    assert "error" in json.loads(err)


def test_oracle(capsys, tmp_path):
    code, out, _ = run(capsys, "oracle", "--config", "cwdmf", "--pair-rate", "0.07", "--out", str(tmp_path))
    assert code == 0
    d = json.loads(out)
    assert 0.87 < d["visibility"]["analyzer-scan"] < 0.97
    assert (tmp_path / "oracle.json").exists()


@pytest.mark.parametrize("scan", ["phase-scan", "analyzer-scan"])
def test_simulate_writes_outputs(capsys, tmp_path, scan):
    argv = ["simulate", scan, "--config", "cwdmf", "--seed", "3", "--gates", "500000", "--points", "8",
            "--out", str(tmp_path)]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    name = scan.replace("-", "_")
    assert (tmp_path / f"{name}.csv").exists() and (tmp_path / f"{name}.json").exists()
    first = (tmp_path / f"{name}.csv").read_text()
    run(capsys, *argv)
    assert (tmp_path / f"{name}.csv").read_text() == first


def test_simulate_power_sweep_oracle_only(capsys):
    code, out, _ = run(capsys, "simulate", "power-sweep", "--config", "dgfawg", "--gates", "0", "--powers", "0.1,0.3")
    assert code == 0
    assert len(json.loads(out)["diagnostics"]["sweep"]) == 2


def test_simulate_fit_failure_is_reported(capsys):
    code, _, err = run(capsys, "simulate", "analyzer-scan", "--config", "cwdmf", "--gates", "1", "--points", "4")
    assert code != 0
    assert json.loads(err)["error"] in {"FitError", "InvalidConfigurationError"}
