import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fiberloop import FitError
from fiberloop.analysis import (
    FringeSeries,
    dark_coincidence_baseline,
    fit_fringe,
    singles_fringe_phases,
    subtract_dark,
    wrap_phase,
)
from fiberloop.config import cwdmf_preset
from fiberloop.engine import RunConfig, run_counts
from fiberloop.experiment import scenario_analyzer_scan
from fiberloop.oracle import expected_coincidence

GRID16 = np.linspace(0, 2 * np.pi, 16, endpoint=False)


def test_subtract_dark_example():
    s = subtract_dark(FringeSeries(np.arange(4.0), [100] * 4, [10] * 4))
    np.testing.assert_array_equal(s.y, [90] * 4)
    np.testing.assert_array_equal(s.variance, [110] * 4)
    assert not s.clipped.any()


def test_subtract_dark_floors_and_flags():
    s = subtract_dark(FringeSeries(np.arange(4.0), [5, 20, 5, 20], [10] * 4))
    np.testing.assert_array_equal(s.y, [0, 10, 0, 10])
    np.testing.assert_array_equal(s.clipped, [True, False, True, False])


def test_subtract_dark_scales_by_gate_ratio():
    s = subtract_dark(FringeSeries(np.arange(4.0), [100] * 4, [5] * 4, gates_per_point=200, dark_gates_per_point=100))
    np.testing.assert_array_equal(s.y, [90] * 4)


def test_subtract_dark_requires_baseline():
    with pytest.raises(ValueError):
        subtract_dark(FringeSeries(np.arange(4.0), [1, 2, 3, 4]))


def test_series_validation():
    with pytest.raises(ValueError):
        FringeSeries([0, 1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        FringeSeries([0, 1, 2, 3], [1, -2, 3, 4])


def test_noiseless_cosine_example():
    fit = fit_fringe(FringeSeries(GRID16, 100 + 90 * np.cos(GRID16)), 1.0)
    assert fit.visibility == pytest.approx(0.9, abs=1e-9)


@given(st.floats(10, 1e6), st.floats(0, 0.99), st.floats(-np.pi, np.pi), st.sampled_from([1.0, 2.0]))
def test_noiseless_recovery(a, v, x0, k):
    x = np.linspace(0, 2 * np.pi / k, 21, endpoint=False)
    b = v * a
    fit = fit_fringe(FringeSeries(x, a + b * np.cos(k * (x - x0))), k)
    assert fit.offset == pytest.approx(a, rel=1e-9)
    assert fit.amplitude == pytest.approx(b, rel=1e-9, abs=1e-9 * a)
    assert fit.visibility == pytest.approx(v, abs=1e-9)
    if v > 0.01:
        assert wrap_phase(k * (fit.phase - x0)) == pytest.approx(0.0, abs=1e-9)


def test_constant_gives_zero_visibility():
    fit = fit_fringe(FringeSeries(GRID16, np.full(16, 400.0)), 1.0)
    assert fit.visibility == pytest.approx(0.0, abs=1e-12)
    # sigma_B ~ sqrt(2 A / n) for Poisson weights
    assert fit.sigma_visibility == pytest.approx(np.sqrt(2 * 400 / 16) / 400, rel=1e-6)


@settings(max_examples=30)
@given(st.floats(1e-3, 1e3))
def test_visibility_scale_invariant(scale):
    rng = np.random.default_rng(5)
    y = rng.poisson(200 + 150 * np.cos(GRID16)).astype(float)
    s = FringeSeries(GRID16, y)
    assert fit_fringe(s.scaled(scale), 1.0).visibility == pytest.approx(fit_fringe(s, 1.0).visibility, rel=1e-9)


def test_degenerate_abscissas_raise():
    with pytest.raises(FitError):
        fit_fringe(FringeSeries(np.zeros(8), np.ones(8)), 1.0)
    with pytest.raises(FitError):
        fit_fringe(FringeSeries(np.linspace(0, 1, 8), np.ones(8)), 1.0)
    with pytest.raises(FitError):
        fit_fringe(FringeSeries(np.array([0, np.pi, 2 * np.pi, 3 * np.pi]), [1, 2, 1, 2]), 1.0)


def test_singles_phases_synthetic():
    phi = np.linspace(0, 2 * np.pi, 36, endpoint=False)
    pump = FringeSeries(phi, 1 + np.cos(phi))
    sig = FringeSeries(phi, 500 + 100 * np.cos(phi - 2.0))
    idl = FringeSeries(phi, 400 + 60 * np.cos(phi + 2.0))
    d_s, d_i = singles_fringe_phases(sig, idl, pump)
    assert d_s == pytest.approx(-2.0, abs=0.1)
    assert d_i == pytest.approx(2.0, abs=0.1)


def test_singles_phases_grid_mismatch():
    phi = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    s = FringeSeries(phi, 1 + np.cos(phi))
    with pytest.raises(ValueError):
        singles_fringe_phases(s, s, FringeSeries(phi + 0.1, 1 + np.cos(phi)))


def test_flat_poisson_amplitude_insignificant():
    rng = np.random.default_rng(8)
    hits = sum(fit_fringe(FringeSeries(GRID16, rng.poisson(5000, 16).astype(float)), 1.0).amplitude_significance < 3
               for _ in range(100))
    assert hits >= 97


def test_sigma_v_matches_replica_spread():
    rng = np.random.default_rng(21)
    x = np.linspace(0, np.pi, 36, endpoint=False)
    lam = 300 * (1 + 0.85 * np.cos(2 * x)) + 40
    dark = np.full_like(x, 40.0)
    vs, sig = [], []
    for _ in range(80):
        s = FringeSeries(x, rng.poisson(lam).astype(float), rng.poisson(dark).astype(float))
        f = fit_fringe(subtract_dark(s), 2.0)
        vs.append(f.visibility)
        sig.append(f.sigma_visibility)
    ratio = np.std(vs, ddof=1) / np.mean(sig)
    assert 1 / 1.5 <= ratio <= 1.5


def test_dark_baseline_exact_inversion():
    # photon-only probabilities p_s, p_i, p_c combined with independent darks
    p_s, p_i, p_c, d_s, d_i = 0.01, 0.008, 0.002, 5e-4, 7e-4
    q_s, q_i = (1 - p_s) * (1 - d_s), (1 - p_i) * (1 - d_i)
    q_none = (1 - p_s - p_i + p_c) * (1 - d_s) * (1 - d_i)
    c_s, c_i = 1 - q_s, 1 - q_i
    c_c = 1 - q_s - q_i + q_none
    n = 1e8
    base = dark_coincidence_baseline(n, c_s * n, c_i * n, c_c * n, d_s * n, d_i * n)
    assert (c_c * n - base) / n == pytest.approx(p_c, rel=1e-9)


def test_pump_on_minus_blocked_matches_oracle():
    cfg = cwdmf_preset()
    gates = 4_000_000
    on = run_counts(RunConfig(cfg, gates, 3))
    off = run_counts(RunConfig(cfg, gates, 4, pump_blocked=True))
    p = expected_coincidence(cfg.rates(), cfg.detection_efficiency("signal"), cfg.detection_efficiency("idler"),
                             np.pi / 4, np.pi / 4, 0.0, cfg.state(0.0))
    for got, dark, want in ((on.singles_signal, off.singles_signal, p.singles_signal),
                            (on.singles_idler, off.singles_idler, p.singles_idler)):
        assert abs(got - dark - want * gates) <= 3 * np.sqrt(got + dark)
    base = dark_coincidence_baseline(gates, on.singles_signal, on.singles_idler, on.coincidences,
                                     off.singles_signal, off.singles_idler)
    assert abs(on.coincidences - base - p.total_coincidence * gates) <= 3 * np.sqrt(on.coincidences)


def test_engine_to_fit_92_percent_scenario():
    res = scenario_analyzer_scan(cwdmf_preset(), np.linspace(0, np.pi, 21, endpoint=False), seed=7)
    fit = res.fits["coincidences"]
    assert abs(fit.visibility - res.oracle["visibility"]) <= 2 * fit.sigma_visibility


def test_dark_subtracted_fit_scale_invariant():
    rng = np.random.default_rng(6)
    s = FringeSeries(GRID16, rng.poisson(50 + 40 * np.cos(GRID16)).astype(float), rng.poisson(np.full(16, 20.0)))
    base = fit_fringe(subtract_dark(s), 1.0)
    scaled = fit_fringe(subtract_dark(s.scaled(1e-6)), 1.0)
    assert scaled.visibility == pytest.approx(base.visibility, rel=1e-9)
    assert scaled.sigma_visibility == pytest.approx(base.sigma_visibility, rel=1e-9)
