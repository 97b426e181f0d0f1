import json
from dataclasses import replace

import numpy as np
import pytest

from fiberloop import InvalidConfigurationError
from fiberloop.analysis import fit_fringe, subtract_dark, wrap_phase
from fiberloop.config import cwdmf_preset, dgfawg_preset
from fiberloop.detection import ChannelEfficiency, Component, DetectorSpec
from fiberloop.experiment import (
    CSV_COLUMNS,
    compare_at_pair_rate,
    read_scan_csv,
    scenario_analyzer_scan,
    scenario_phase_scan,
    scenario_power_sweep,
    series_from_points,
    twenty_second_gates,
)
from fiberloop.source import EmissionCoefficients


def ideal_config():
    ch = ChannelEfficiency((Component("lens", 1.0),), DetectorSpec(0.5), None)
    cfg = cwdmf_preset()
    return replace(cfg, name="ideal", emission=EmissionCoefficients(cfg.emission.c_fps_per_mw2, 0.0, 0.0), xi=1.0,
                   signal_channel=ch, idler_channel=ch, analyzer_transmission=1.0)


def test_twenty_second_gates():
    assert twenty_second_gates(cwdmf_preset()) == 11_765_625


def test_zero_background_phase_scan_near_unit_visibility():
    res = scenario_phase_scan(ideal_config(), np.linspace(0, 2 * np.pi, 24, endpoint=False), 1_000_000, seed=1)
    assert res.visibility > 0.99
    assert res.diagnostics["singles_signal_fringe_significance"] < 4


def test_analyzer_scan_theta_s_zero_peaks_at_zero():
    res = scenario_analyzer_scan(ideal_config(), np.linspace(0, np.pi, 24, endpoint=False), 500_000, seed=2,
                                 theta_s=0.0)
    fit = res.fits["coincidences"]
    assert abs(wrap_phase(2 * fit.phase)) < 3 * 2 * fit.sigma_phase + 0.02


def test_cwdmf_high_power_visibility():
    cfg = cwdmf_preset().with_power(0.15)
    res = scenario_analyzer_scan(cfg, np.linspace(0, np.pi, 36, endpoint=False), seed=4)
    assert res.visibility == pytest.approx(0.78, abs=0.05)
    assert abs(res.visibility - res.oracle["visibility"]) < 3 * res.fits["coincidences"].sigma_visibility


def test_equal_pair_rate_ordering():
    out = compare_at_pair_rate([cwdmf_preset(), dgfawg_preset()], 0.07)
    assert out["cwdmf"]["visibility"] > out["dgfawg"]["visibility"]


def test_power_sweep_oracle_raw_visibility_vanishes_at_low_power():
    res = scenario_power_sweep(cwdmf_preset(), [1e-4, 1e-3, 0.05], gates_per_point=0)
    raw = [r["visibility_raw"] for r in res.diagnostics["sweep"]]
    assert raw[0] < 0.01
    assert raw[0] < raw[1] < raw[2]
    assert all(r["mc_visibility"] is None for r in res.diagnostics["sweep"])


def test_power_sweep_mc_tracks_oracle():
    res = scenario_power_sweep(cwdmf_preset(), [0.05, 0.15], gates_per_point=3_000_000, seed=3, scan_points=16)
    for row in res.diagnostics["sweep"]:
        assert abs(row["mc_visibility"] - row["visibility"]) < 3 * row["mc_sigma_visibility"] + 0.02
    assert len(res.points) == 2


def test_power_sweep_rejects_nonpositive():
    with pytest.raises(InvalidConfigurationError):
        scenario_power_sweep(cwdmf_preset(), [0.0, 0.1], gates_per_point=0)


def test_grid_must_span_a_period():
    with pytest.raises(InvalidConfigurationError):
        scenario_analyzer_scan(cwdmf_preset(), np.linspace(0, 1, 8), 10)
    with pytest.raises(InvalidConfigurationError):
        scenario_phase_scan(cwdmf_preset(), np.linspace(0, np.pi, 8), 10)


def test_scenario_reproducible_across_workers():
    grid = np.linspace(0, np.pi, 4, endpoint=False)
    a = scenario_analyzer_scan(cwdmf_preset(), grid, 300_000, seed=9, workers=1)
    b = scenario_analyzer_scan(cwdmf_preset(), grid, 300_000, seed=9, workers=2)
    assert [p.counts for p in a.points] == [p.counts for p in b.points]


def test_csv_round_trip(tmp_path):
    grid = np.linspace(0, np.pi, 8, endpoint=False)
    res = scenario_analyzer_scan(cwdmf_preset(), grid, 400_000, seed=5)
    csv_path, json_path = res.write(tmp_path)
    header = csv_path.read_text().splitlines()[0].split(",")
    assert tuple(header) == CSV_COLUMNS
    back = read_scan_csv(csv_path)
    assert [p.counts for p in back] == [p.counts for p in res.points]
    assert [p.x for p in back] == [p.x for p in res.points]
    refit = fit_fringe(subtract_dark(series_from_points(back, "coincidences")), 2.0)
    assert refit == res.fits["coincidences"]
    side = json.loads(json_path.read_text())
    assert side["provenance"]["config_hash"] == res.config_hash
    assert all(line.endswith(res.config_hash) for line in csv_path.read_text().splitlines()[1:])
