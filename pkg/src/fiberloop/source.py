"""Filter and pump spectra, and per-pulse emission rates of the three photon populations."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from . import InvalidConfigurationError

C_NM_THZ = 299_792.458  # speed of light in nm * THz
FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))


@dataclass(frozen=True)
class FilterSpec:
    """Passband ``peak * exp(-0.5 * ((lambda - center) / width) ** (2m))`` above an isolation floor.

    ``super_gaussian_order`` m = 1 is a plain Gaussian.
    """

    center_wavelength_nm: float
    peak_transmission: float
    half_width_nm: float
    super_gaussian_order: float = 1.0
    isolation_floor: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.peak_transmission <= 1.0:
            raise InvalidConfigurationError("peak_transmission must lie in (0, 1]")
        if not self.half_width_nm > 0:
            raise InvalidConfigurationError("half_width_nm must be positive")
        if not self.super_gaussian_order >= 1:
            raise InvalidConfigurationError("super_gaussian_order must be >= 1")
        if not 0.0 <= self.isolation_floor < self.peak_transmission:
            raise InvalidConfigurationError("isolation_floor must lie in [0, peak_transmission)")

    @property
    def fwhm_nm(self) -> float:
        """Analytic full width at half maximum of the passband (floor ignored)."""
        return 2.0 * self.half_width_nm * (2.0 * np.log(2.0)) ** (1.0 / (2.0 * self.super_gaussian_order))

    @staticmethod
    def isolation_floor_from_db(db: float) -> float:
        return 10.0 ** (-db / 10.0)

    def shape(self, wavelength_nm):
        """Passband normalized to unit peak, without the floor."""
        x = (np.asarray(wavelength_nm, dtype=float) - self.center_wavelength_nm) / self.half_width_nm
        return np.exp(-0.5 * np.abs(x) ** (2.0 * self.super_gaussian_order))


@dataclass(frozen=True)
class PumpSpec:
    center_wavelength_nm: float = 1538.7
    fwhm_nm: float = 0.8
    power_h_mw: float = 0.05
    power_v_mw: float = 0.05
    phi_p_rad: float = 0.0
    pulse_duration_ps: float = 5.0
    repetition_rate_mhz: float = 75.3
    photons_per_pulse: float = 1e7

    def __post_init__(self):
        for name in ("center_wavelength_nm", "fwhm_nm", "pulse_duration_ps", "repetition_rate_mhz"):
            if not getattr(self, name) > 0:
                raise InvalidConfigurationError(f"{name} must be positive")
        if self.power_h_mw < 0 or self.power_v_mw < 0:
            raise InvalidConfigurationError("pump powers must be nonnegative")
        if self.photons_per_pulse < 0:
            raise InvalidConfigurationError("photons_per_pulse must be nonnegative")

    @property
    def mean_arm_power_mw(self) -> float:
        return 0.5 * (self.power_h_mw + self.power_v_mw)

    def with_power(self, power_mw: float, phi_p_rad: float | None = None) -> "PumpSpec":
        """Same pump with both arms at ``power_mw``."""
        phi = self.phi_p_rad if phi_p_rad is None else phi_p_rad
        return replace(self, power_h_mw=power_mw, power_v_mw=power_mw, phi_p_rad=phi)


@dataclass(frozen=True)
class EmissionCoefficients:
    """Phenomenological power laws, with powers in mW per pump arm.

    pairs = c_fps * (P_H^2 + P_V^2) / 2, Raman per channel = c_raman * (P_H + P_V) / 2,
    SPM leakage per channel = c_spm * (P / spm_reference_power) ** spm_exponent
    using the mean arm power P, scaled by ``spm_idler_ratio`` in the idler band.
    """

    c_fps_per_mw2: float = 0.0
    c_raman_per_mw: float = 0.0
    c_spm: float = 0.0
    spm_reference_power_mw: float = 1.0
    spm_exponent: float = 3.0
    spm_idler_ratio: float = 1.0
    spm_phase_signal_rad: float = -2.0
    spm_phase_idler_rad: float = 2.0

    def __post_init__(self):
        for name in ("c_fps_per_mw2", "c_raman_per_mw", "c_spm", "spm_exponent", "spm_idler_ratio"):
            if getattr(self, name) < 0:
                raise InvalidConfigurationError(f"{name} must be nonnegative")
        if not self.spm_reference_power_mw > 0:
            raise InvalidConfigurationError("spm_reference_power_mw must be positive")


@dataclass(frozen=True)
class EmissionRates:
    """Mean photons per pulse in each filter passband, before analyzers and detection loss."""

    pair_rate: float = 0.0
    xi: float = 1.0
    raman_signal: float = 0.0
    raman_idler: float = 0.0
    spm_signal: float = 0.0
    spm_idler: float = 0.0
    spm_phase_signal: float = -2.0
    spm_phase_idler: float = 2.0

    def __post_init__(self):
        for name in ("pair_rate", "raman_signal", "raman_idler", "spm_signal", "spm_idler"):
            if getattr(self, name) < 0:
                raise InvalidConfigurationError(f"{name} must be nonnegative")
        if not 0.0 <= self.xi <= 1.0:
            raise InvalidConfigurationError("xi must lie in [0, 1]")

    def total(self, channel: Literal["signal", "idler"]) -> float:
        """Mean photons per pulse in one channel (pairs + Raman + SPM)."""
        if channel == "signal":
            return self.pair_rate + self.raman_signal + self.spm_signal
        return self.pair_rate + self.raman_idler + self.spm_idler

    def background(self, channel: Literal["signal", "idler"]) -> float:
        return self.total(channel) - self.pair_rate

    def without_spm(self) -> "EmissionRates":
        return replace(self, spm_signal=0.0, spm_idler=0.0)


def filter_transmission(filt: FilterSpec, wavelength_nm):
    t = filt.peak_transmission * filt.shape(wavelength_nm)
    out = np.maximum(filt.isolation_floor, t)
    return float(out) if np.ndim(out) == 0 else out


def idler_wavelength(pump_wavelength_nm: float, signal_wavelength_nm: float) -> float:
    """Idler wavelength from 2/lambda_p = 1/lambda_s + 1/lambda_i."""
    if pump_wavelength_nm <= 0 or signal_wavelength_nm <= 0:
        raise InvalidConfigurationError("wavelengths must be positive")
    inv = 2.0 / pump_wavelength_nm - 1.0 / signal_wavelength_nm
    if inv <= 0:
        raise InvalidConfigurationError("no physical idler for this pump/signal pair")
    return 1.0 / inv


def pump_leakage_photons(pump: PumpSpec, filt: FilterSpec) -> float:
    """Mean pump photons per pulse passing the filter at the pump center wavelength."""
    return pump.photons_per_pulse * filter_transmission(filt, pump.center_wavelength_nm)


def emission_rates(coeffs: EmissionCoefficients, pump: PumpSpec, xi: float) -> EmissionRates:
    p_h, p_v = pump.power_h_mw, pump.power_v_mw
    p_mean = 0.5 * (p_h + p_v)
    spm = coeffs.c_spm * (p_mean / coeffs.spm_reference_power_mw) ** coeffs.spm_exponent
    raman = coeffs.c_raman_per_mw * p_mean
    return EmissionRates(
        pair_rate=coeffs.c_fps_per_mw2 * 0.5 * (p_h**2 + p_v**2),
        xi=xi,
        raman_signal=raman,
        raman_idler=raman,
        spm_signal=spm,
        spm_idler=spm * coeffs.spm_idler_ratio,
        spm_phase_signal=coeffs.spm_phase_signal_rad,
        spm_phase_idler=coeffs.spm_phase_idler_rad,
    )


def spm_post_analyzer_mean(rates: EmissionRates, channel: Literal["signal", "idler"], theta, phi_p: float) -> float:
    """Leaked pump photons passing the analyzer.

    The leaked pump is an equal-amplitude H/V superposition whose relative
    phase is the pump phase shifted by a channel-specific offset.
    """
    if channel == "signal":
        mean, delta = rates.spm_signal, rates.spm_phase_signal
    elif channel == "idler":
        mean, delta = rates.spm_idler, rates.spm_phase_idler
    else:
        raise ValueError(f"unknown channel {channel!r}")
    return mean * 0.5 * (1.0 + np.sin(2.0 * float(theta)) * np.cos(phi_p + delta))


def _grid(filt: FilterSpec, span_nm: float = 5.0, step_nm: float = 0.01) -> np.ndarray:
    # narrow passbands get a finer, shorter grid so they stay resolved
    step = min(step_nm, filt.half_width_nm / 20.0)
    half = min(span_nm, 2000 * step)
    n = int(round(half / step))
    return filt.center_wavelength_nm + step * np.arange(-n, n + 1)


def _integral_uniform(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.trapezoid(y, x))


def estimate_xi_overlap(pump: PumpSpec, signal_filter: FilterSpec, idler_filter: FilterSpec) -> float:
    """Heuristic pair-correlation coefficient from spectral overlap.

    Probability that the partner of a photon transmitted by the signal
    filter is transmitted by the idler filter (both at unit peak). The
    joint spectrum is approximated by the autoconvolution of a
    transform-limited Gaussian pump amplitude; phase matching is taken as
    flat. The calibrated coefficient should be preferred over this number.
    """
    for f in (signal_filter, idler_filter):
        if not f.half_width_nm > 1e-9:
            raise InvalidConfigurationError("degenerate filter width")

    # pump amplitude on a uniform frequency grid, then its autoconvolution
    sigma_l = pump.fwhm_nm / FWHM_PER_SIGMA
    lam_p = pump.center_wavelength_nm
    nu_p = C_NM_THZ / lam_p
    dnu = C_NM_THZ * 0.01 / lam_p**2
    half_span = C_NM_THZ * 10 * sigma_l / lam_p**2
    nu = nu_p + dnu * np.arange(-int(half_span / dnu), int(half_span / dnu) + 1)
    amp = np.exp(-0.25 * ((C_NM_THZ / nu - lam_p) / sigma_l) ** 2)
    sum_amp = np.convolve(amp, amp) * dnu
    omega = 2 * nu[0] + dnu * np.arange(sum_amp.size)
    g = np.abs(sum_amp) ** 2
    g_norm = _integral_uniform(g, omega)

    lam_s = _grid(signal_filter)
    lam_i = _grid(idler_filter)
    nu_s = C_NM_THZ / lam_s
    nu_i = C_NM_THZ / lam_i
    fs = signal_filter.shape(lam_s)
    fi = idler_filter.shape(lam_i)
    joint = np.interp(nu_s[:, None] + nu_i[None, :], omega, g, left=0.0, right=0.0)
    # integrate over frequency; grids are uniform in wavelength, so weight by |dnu/dlambda|
    ws = C_NM_THZ / lam_s**2
    wi = C_NM_THZ / lam_i**2
    inner = np.trapezoid(joint * (fi * wi)[None, :], lam_i, axis=1)
    num = np.trapezoid(fs * ws * inner, lam_s)
    den = np.trapezoid(fs * ws, lam_s) * g_norm
    return float(np.clip(num / den, 0.0, 1.0))
