"""Closed-form first-order singles, coincidence and visibility predictions.

Valid while all mean photon numbers per gate are small; the Monte Carlo
engine is the reference when they are not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .polarization import Channel, TwoPhotonState, joint_outcome_probabilities, make_source_state, \
    marginal_pass_probability
from .source import EmissionRates, spm_post_analyzer_mean

ScanKind = Literal["phase-scan", "analyzer-scan"]


@dataclass(frozen=True)
class RatePrediction:
    singles_signal: float
    singles_idler: float
    true_coincidence: float
    accidental_coincidence: float

    @property
    def total_coincidence(self) -> float:
        return self.true_coincidence + self.accidental_coincidence


def rate_bracket(theta_1: float, theta_2: float, phi_p: float) -> float:
    """Angular factor of the coincidence probability for the loop's maximally entangled state."""
    c1, s1, c2, s2 = np.cos(theta_1), np.sin(theta_1), np.cos(theta_2), np.sin(theta_2)
    return c1**2 * c2**2 + s1**2 * s2**2 + 2 * np.cos(2 * phi_p) * s1 * c1 * s2 * c2


def _state(state: TwoPhotonState | None, phi_p: float) -> TwoPhotonState:
    return state if state is not None else make_source_state(1.0, 1.0, phi_p)


def expected_singles(rates: EmissionRates, eta: float, theta: float, phi_p: float, channel: Channel,
                     state: TwoPhotonState | None = None, dark_count: float = 0.0) -> float:
    """Click probability per gate in one channel.

    ``state`` defaults to the equal-power loop state at ``phi_p``.
    """
    st = _state(state, phi_p)
    raman = rates.raman_signal if channel == "signal" else rates.raman_idler
    photons = (rates.pair_rate * marginal_pass_probability(st, channel, theta)
               + 0.5 * raman
               + spm_post_analyzer_mean(rates, channel, theta, phi_p))
    return float(eta * photons + dark_count)


def expected_coincidence(rates: EmissionRates, eta_s: float, eta_i: float, theta_s: float, theta_i: float,
                         phi_p: float, state: TwoPhotonState | None = None,
                         dark_s: float = 0.0, dark_i: float = 0.0) -> RatePrediction:
    st = _state(state, phi_p)
    pass_pass = joint_outcome_probabilities(st, theta_s, theta_i)[0]
    s = expected_singles(rates, eta_s, theta_s, phi_p, "signal", st, dark_s)
    i = expected_singles(rates, eta_i, theta_i, phi_p, "idler", st, dark_i)
    return RatePrediction(
        singles_signal=s,
        singles_idler=i,
        true_coincidence=float(rates.xi * eta_s * eta_i * rates.pair_rate * pass_pass),
        accidental_coincidence=s * i,
    )


def scan_coincidences(rates: EmissionRates, eta_s: float, eta_i: float, scan_kind: ScanKind, x: np.ndarray,
                      theta_s: float = np.pi / 4, theta_i: float = np.pi / 4, phi_p: float = 0.0,
                      dark_s: float = 0.0, dark_i: float = 0.0) -> list[RatePrediction]:
    """Predictions along a scan: ``x`` is phi_p for phase scans, the idler angle for analyzer scans."""
    out = []
    for xv in np.atleast_1d(x):
        if scan_kind == "phase-scan":
            args = (theta_s, theta_i, float(xv))
        elif scan_kind == "analyzer-scan":
            args = (theta_s, float(xv), phi_p)
        else:
            raise ValueError(f"unknown scan kind {scan_kind!r}")
        out.append(expected_coincidence(rates, eta_s, eta_i, *args, dark_s=dark_s, dark_i=dark_i))
    return out


def expected_visibility(rates: EmissionRates, eta_s: float, eta_i: float, scan_kind: ScanKind = "analyzer-scan",
                        theta_s: float = np.pi / 4, theta_i: float = np.pi / 4, phi_p: float = 0.0,
                        dark_s: float = 0.0, dark_i: float = 0.0, dark_subtracted: bool = True,
                        points: int = 721) -> float:
    """Coincidence fringe visibility (max - min) / (max + min) over one full scan.

    With ``dark_subtracted`` every dark-count contribution is removed, as the
    data reduction does; otherwise dark clicks add to the accidentals. For
    constant backgrounds this is T / (T + 2A) with T the true-coincidence
    amplitude and A the accidentals.
    """
    if dark_subtracted:
        dark_s = dark_i = 0.0
    x = np.linspace(0.0, np.pi, points) if scan_kind == "analyzer-scan" else np.linspace(0.0, 2 * np.pi, points)
    c = np.array([p.total_coincidence for p in scan_coincidences(
        rates, eta_s, eta_i, scan_kind, x, theta_s, theta_i, phi_p, dark_s, dark_i)])
    hi, lo = c.max(), c.min()
    return float((hi - lo) / (hi + lo)) if hi + lo > 0 else 0.0


def visibility_from_totals(xi: float, pair_rate: float, total_photons: float, eta_s: float, eta_i: float) -> float:
    """T / (T + 2A) for a maximally entangled source with unpolarized background."""
    t = 0.5 * xi * eta_s * eta_i * pair_rate
    a = (0.5 * eta_s * total_photons) * (0.5 * eta_i * total_photons)
    return t / (t + 2 * a)


def solve_xi(visibility: float, pair_rate: float, total_photons: float, eta_s: float, eta_i: float) -> float:
    """Pair-correlation coefficient that yields ``visibility`` under :func:`visibility_from_totals`."""
    a = (0.5 * eta_s * total_photons) * (0.5 * eta_i * total_photons)
    t = 2 * a * visibility / (1 - visibility)
    return t / (0.5 * eta_s * eta_i * pair_rate)
