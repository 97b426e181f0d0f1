"""Fit emission power-law coefficients to measured operating points."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import nnls

from . import InvalidConfigurationError
from .source import EmissionCoefficients


@dataclass(frozen=True)
class OperatingPoint:
    """Measured per-channel totals at equal per-arm pump power."""

    power_mw: float
    total_photons: float
    pair_rate: float


@dataclass(frozen=True)
class Calibration:
    coefficients: EmissionCoefficients
    pair_residuals: tuple[float, ...]
    background_residuals: tuple[float, ...]

    @property
    def max_relative_residual(self) -> float:
        return max(map(abs, self.pair_residuals + self.background_residuals), default=0.0)


def _weighted_nnls(design: np.ndarray, y: np.ndarray, relative: bool) -> np.ndarray:
    if design.shape[0] < design.shape[1]:
        raise InvalidConfigurationError(
            f"under-determined calibration: {design.shape[0]} targets for {design.shape[1]} coefficients")
    w = 1.0 / y if relative and np.all(y > 0) else np.ones_like(y)
    a = design * w[:, None]
    if np.linalg.matrix_rank(a) < design.shape[1]:
        raise InvalidConfigurationError("calibration targets do not constrain every coefficient")
    coef, _ = nnls(a, y * w)
    return coef


def _rel(pred: np.ndarray, y: np.ndarray) -> tuple[float, ...]:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(y > 0, (pred - y) / np.where(y > 0, y, 1.0), pred)
    return tuple(float(v) for v in r)


def calibrate(
    targets: Iterable[OperatingPoint | Sequence[float]],
    base: EmissionCoefficients | None = None,
    fit_spm: bool = False,
    relative: bool = True,
) -> Calibration:
    """Least-squares coefficients for the pair, Raman and (optionally) SPM laws.

    Targets are ``(power_mw, total_photons, pair_rate)`` at equal arm powers.
    The pair law is fitted to the pair rates; Raman (and SPM when
    ``fit_spm``) to the background ``total - pairs``. Without ``fit_spm``
    the SPM term of ``base`` is held fixed and subtracted. With
    ``relative`` each residual is scaled by its target value. Residuals are
    returned relative to the targets so poor fits stay visible.
    """
    pts = [t if isinstance(t, OperatingPoint) else OperatingPoint(*t) for t in targets]
    if not pts:
        raise InvalidConfigurationError("no calibration targets")
    base = base or EmissionCoefficients()
    p = np.array([t.power_mw for t in pts], dtype=float)
    if np.any(p <= 0):
        raise InvalidConfigurationError("calibration powers must be positive")
    pairs = np.array([t.pair_rate for t in pts], dtype=float)
    bg = np.array([t.total_photons - t.pair_rate for t in pts], dtype=float)
    if np.any(pairs < 0) or np.any(bg < 0):
        raise InvalidConfigurationError("targets need 0 <= pair_rate <= total_photons")

    (c_fps,) = _weighted_nnls((p**2)[:, None], pairs, relative)
    spm_shape = (p / base.spm_reference_power_mw) ** base.spm_exponent
    if fit_spm:
        c_raman, c_spm = _weighted_nnls(np.column_stack([p, spm_shape]), bg, relative)
    else:
        c_spm = base.c_spm
        (c_raman,) = _weighted_nnls(p[:, None], np.clip(bg - c_spm * spm_shape, 0.0, None), relative)

    coeffs = replace(base, c_fps_per_mw2=float(c_fps), c_raman_per_mw=float(c_raman), c_spm=float(c_spm))
    return Calibration(
        coefficients=coeffs,
        pair_residuals=_rel(c_fps * p**2, pairs),
        background_residuals=_rel(c_raman * p + c_spm * spm_shape, bg),
    )
