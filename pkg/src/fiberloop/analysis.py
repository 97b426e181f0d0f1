"""Fringe fitting, dark-count subtraction and visibility extraction."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import FitError


@dataclass
class FringeSeries:
    """Counts recorded along a scan.

    ``x`` is in radians (pump phase, pair phase or analyzer angle).
    ``y_dark`` is the pump-blocked baseline, recorded over
    ``dark_gates_per_point`` gates (defaults to ``gates_per_point``).
    ``unit`` is the value of one count in ``y`` units, so rescaled series
    keep their Poisson weights.
    """

    x: np.ndarray
    y: np.ndarray
    y_dark: np.ndarray | None = None
    gates_per_point: int = 1
    dark_gates_per_point: int | None = None
    variance: np.ndarray | None = None
    clipped: np.ndarray | None = None
    unit: float = 1.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("x and y must be 1-d and of equal length")
        if self.x.size < 4:
            raise ValueError("a fringe series needs at least 4 points")
        if np.any(self.y < 0):
            raise ValueError("counts must be nonnegative")
        if self.y_dark is not None:
            self.y_dark = np.asarray(self.y_dark, dtype=float)
            if self.y_dark.shape != self.y.shape:
                raise ValueError("dark baseline length differs from y")

    def scaled(self, factor: float) -> "FringeSeries":
        var = None if self.variance is None else self.variance * factor**2
        dark = None if self.y_dark is None else self.y_dark * factor
        return replace(self, y=self.y * factor, y_dark=dark, variance=var, unit=self.unit * factor)


@dataclass(frozen=True)
class FringeFit:
    """``y = offset + amplitude * cos(k * (x - phase))`` with amplitude >= 0."""

    offset: float
    amplitude: float
    phase: float
    angular_frequency: float
    sigma_offset: float
    sigma_amplitude: float
    sigma_phase: float
    sigma_visibility: float
    chi2: float
    dof: int

    @property
    def visibility(self) -> float:
        return abs(self.amplitude) / self.offset

    @property
    def phase_offset(self) -> float:
        """psi in ``cos(k x + psi)``, wrapped to (-pi, pi]."""
        return wrap_phase(-self.angular_frequency * self.phase)

    @property
    def overshoot(self) -> bool:
        """Visibility above 1 by more than three standard deviations."""
        return self.visibility > 1 + 3 * self.sigma_visibility

    @property
    def amplitude_significance(self) -> float:
        return self.amplitude / self.sigma_amplitude if self.sigma_amplitude > 0 else np.inf

    def evaluate(self, x) -> np.ndarray:
        return self.offset + self.amplitude * np.cos(self.angular_frequency * (np.asarray(x) - self.phase))


def wrap_phase(phi):
    """Wrap to (-pi, pi]."""
    w = np.pi - np.mod(np.pi - np.asarray(phi, dtype=float), 2 * np.pi)
    return float(w) if np.ndim(w) == 0 else w


def subtract_dark(series: FringeSeries) -> FringeSeries:
    """Remove the pump-blocked baseline, floor at zero and propagate Poisson variance."""
    if series.y_dark is None:
        raise ValueError("series has no dark baseline to subtract")
    dark_gates = series.dark_gates_per_point or series.gates_per_point
    scale = series.gates_per_point / dark_gates
    dark = series.y_dark * scale
    y = series.y - dark
    clipped = y < 0
    return replace(
        series,
        y=np.where(clipped, 0.0, y),
        y_dark=None,
        variance=series.unit * (series.y + dark * scale),
        clipped=clipped,
    )


def dark_coincidence_baseline(gates, singles_s, singles_i, coincidences, dark_s, dark_i, dark_gates=None):
    """Coincidences caused by at least one dark count, per scan point.

    Uses the per-gate dark probabilities measured with the pump blocked.
    Since a click is a photon detection OR an independent dark count, the
    photon-only click statistics follow exactly from the measured no-click
    fractions.
    """
    n = np.asarray(gates, dtype=float)
    nd = n if dark_gates is None else np.asarray(dark_gates, dtype=float)
    ps, pi, pc = (np.asarray(v, dtype=float) / n for v in (singles_s, singles_i, coincidences))
    ds, di = np.asarray(dark_s, dtype=float) / nd, np.asarray(dark_i, dtype=float) / nd
    q_s = (1 - ps) / (1 - ds)
    q_i = (1 - pi) / (1 - di)
    q_none = (1 - ps - pi + pc) / ((1 - ds) * (1 - di))
    photon_pc = 1 - q_s - q_i + q_none
    return n * (pc - photon_pc)


def fit_fringe(series: FringeSeries, angular_frequency: float, iterations: int = 3, birge: bool = True) -> FringeFit:
    """Weighted linear least squares on the basis {1, cos kx, sin kx}.

    Weights are ``1 / max(var, 1)`` with ``var`` the propagated variance
    when present, else the counts themselves. The covariance is scaled up by
    the reduced chi-square when that exceeds one.
    """
    u = series.unit
    if not u > 0:
        raise FitError("series unit must be positive")
    x, y, k = series.x, series.y / u, float(angular_frequency)
    n = x.size
    if n < 4:
        raise FitError("need at least 4 points")
    if k * (x.max() - x.min()) < 2 * np.pi * (n - 1) / n - 1e-9:
        raise FitError("scan does not span one fringe period")
    X = np.column_stack([np.ones(n), np.cos(k * x), np.sin(k * x)])
    var = series.variance / u**2 if series.variance is not None else y
    extra = 0.0 if series.variance is None else var - y
    for it in range(iterations + 1):
        w = 1.0 / np.maximum(var, 1.0)
        xtw = X.T * w
        normal = xtw @ X
        if np.linalg.matrix_rank(normal) < 3:
            raise FitError("degenerate abscissas: design matrix is singular")
        cov = np.linalg.inv(normal)
        a, c, s = cov @ (xtw @ y)
        # expected rather than observed counts as the Poisson variance
        var = np.maximum(X @ np.array([a, c, s]), 0.0) + extra
    resid = y - X @ np.array([a, c, s])
    chi2 = float(np.sum(w * resid**2))
    dof = n - 3
    if birge and dof > 0 and chi2 / dof > 1:
        cov = cov * (chi2 / dof)
    if a <= 0:
        raise FitError("fitted offset is not positive")

    b = float(np.hypot(c, s))
    var_a = cov[0, 0]
    if b > 1e-12 * max(abs(a), 1.0):
        gb = np.array([0.0, c / b, s / b])
        gv = np.array([-b / a**2, c / (a * b), s / (a * b)])
        gx = np.array([0.0, -s / b**2, c / b**2]) / k
        sigma_b = np.sqrt(gb @ cov @ gb)
        sigma_v = np.sqrt(gv @ cov @ gv)
        sigma_x0 = np.sqrt(gx @ cov @ gx)
    else:
        sigma_b = np.sqrt(0.5 * (cov[1, 1] + cov[2, 2]))
        sigma_v = sigma_b / a
        sigma_x0 = np.pi / k
    return FringeFit(
        offset=float(a) * u,
        amplitude=b * u,
        phase=float(np.arctan2(s, c) / k),
        angular_frequency=k,
        sigma_offset=float(np.sqrt(var_a)) * u,
        sigma_amplitude=float(sigma_b) * u,
        sigma_phase=float(sigma_x0),
        sigma_visibility=float(sigma_v),
        chi2=chi2,
        dof=dof,
    )


def singles_fringe_phases(signal: FringeSeries, idler: FringeSeries, pump: FringeSeries) -> tuple[float, float]:
    """Phase offsets of the signal and idler singles fringes relative to the pump fringe.

    All three series are fitted with unit angular frequency over the same
    pump-phase grid; a negative offset means the fringe maximum comes later.
    """
    if not (np.allclose(signal.x, pump.x) and np.allclose(idler.x, pump.x)):
        raise ValueError("series must share the pump-phase grid")
    fp, fs, fi = (fit_fringe(s, 1.0) for s in (pump, signal, idler))
    return wrap_phase(fs.phase_offset - fp.phase_offset), wrap_phase(fi.phase_offset - fp.phase_offset)
