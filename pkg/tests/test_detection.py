import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fiberloop import InvalidConfigurationError
from fiberloop.detection import (
    ChannelEfficiency,
    Component,
    DetectorSpec,
    click_probability,
    gate_schedule,
    sample_clicks,
    total_efficiency,
)


def channel(parts, qe):
    return ChannelEfficiency(tuple(Component(f"c{i}", t) for i, t in enumerate(parts)), DetectorSpec(qe))


@pytest.mark.parametrize("qe, expected, quoted", [(0.25, 0.0361, 0.035), (0.20, 0.0289, 0.028)])
def test_dgfawg_efficiencies(qe, expected, quoted):
    eta = total_efficiency(channel([0.85, 0.20, 0.85], qe))
    assert eta == pytest.approx(expected, abs=5e-5)
    assert eta == pytest.approx(quoted, rel=0.05)


def test_empty_channel():
    assert total_efficiency(channel([], 1.0)) == 1.0


def test_order_independent():
    parts = [0.85, 0.2, 0.85, 0.7]
    values = {round(total_efficiency(channel(p, 0.25)), 15) for p in itertools.permutations(parts)}
    assert len(values) == 1


def test_mismatch_flag():
    ch = ChannelEfficiency((Component("dsf", 0.85), Component("cwdmf", 0.80), Component("other", 0.85)),
                           DetectorSpec(0.25), quoted_total_efficiency=0.10)
    assert ch.mismatch() == pytest.approx(0.445, abs=0.001)


def test_component_invariants():
    with pytest.raises(InvalidConfigurationError):
        Component("x", 0.0)
    with pytest.raises(InvalidConfigurationError):
        DetectorSpec(1.2)
    with pytest.raises(InvalidConfigurationError):
        DetectorSpec(0.2, 1.0)


def test_click_probability_examples():
    assert click_probability(0.0, DetectorSpec(0.5, 0.0)) == 0.0
    assert click_probability(1e4, DetectorSpec(0.5, 0.0)) == pytest.approx(1.0)
    p = click_probability(0.1, DetectorSpec(0.1, 5e-4))
    assert p == pytest.approx(1 - 0.9995 * math.exp(-0.01), rel=1e-12)
    assert p == pytest.approx(0.01044, abs=1e-5)


@given(mu=st.floats(0, 5), qe=st.floats(0, 1), d=st.floats(0, 0.5), dmu=st.floats(0, 1),
       dq=st.floats(0, 0.5), dd=st.floats(0, 0.4))
def test_click_probability_monotone(mu, qe, d, dmu, dq, dd):
    base = click_probability(mu, DetectorSpec(qe, d))
    assert click_probability(mu + dmu, DetectorSpec(qe, d)) >= base - 1e-15
    assert click_probability(mu, DetectorSpec(min(qe + dq, 1), d)) >= base - 1e-15
    assert click_probability(mu, DetectorSpec(qe, min(d + dd, 0.99))) >= base - 1e-15
    assert click_probability(0.0, DetectorSpec(qe, d)) == pytest.approx(d)


def test_monte_carlo_thinning_matches_closed_form():
    r = np.random.default_rng(11)
    n = 10_000_000
    for _ in range(20):
        mu, qe, d = r.uniform(0, 0.5), r.uniform(0.05, 1), r.uniform(0, 1e-2)
        det = DetectorSpec(qe, d)
        clicks = sample_clicks(r.poisson(mu, n), det, r).sum()
        p = click_probability(mu, det)
        assert abs(clicks - n * p) < 3 * math.sqrt(n * p * (1 - p)) + 1


def test_gate_schedule():
    assert gate_schedule(75.3, 128) == pytest.approx(588, abs=1)
    assert gate_schedule(75.3, 1) == pytest.approx(75_300)
    assert gate_schedule(75.3, 64) == pytest.approx(1176.6, abs=0.05)
    with pytest.raises(InvalidConfigurationError):
        gate_schedule(75.3, 0)
