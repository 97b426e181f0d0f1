"""Channel efficiencies and gated-Geiger click statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import InvalidConfigurationError

DEFAULT_DARK_COUNT = 5e-4  # per 1 ns gate


@dataclass(frozen=True)
class DetectorSpec:
    quantum_efficiency: float
    dark_count_prob_per_gate: float = DEFAULT_DARK_COUNT
    gate_width_ns: float = 1.0
    gate_rate_khz: float = 588.28125

    def __post_init__(self):
        if not 0.0 <= self.quantum_efficiency <= 1.0:
            raise InvalidConfigurationError("quantum_efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_count_prob_per_gate < 1.0:
            raise InvalidConfigurationError("dark_count_prob_per_gate must lie in [0, 1)")
        if not self.gate_width_ns > 0 or not self.gate_rate_khz > 0:
            raise InvalidConfigurationError("gate width and rate must be positive")


@dataclass(frozen=True)
class Component:
    label: str
    transmission: float

    def __post_init__(self):
        if not 0.0 < self.transmission <= 1.0:
            raise InvalidConfigurationError(f"transmission of {self.label!r} must lie in (0, 1]")


@dataclass(frozen=True)
class ChannelEfficiency:
    """Lossy path from the loop output to one detector.

    ``quoted_total_efficiency`` is a reference figure kept only for the
    consistency check in :meth:`mismatch`; the model always uses the product.
    """

    components: tuple[Component, ...] = field(default_factory=tuple)
    detector: DetectorSpec = field(default_factory=lambda: DetectorSpec(1.0, 0.0))
    quoted_total_efficiency: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(
            c if isinstance(c, Component) else Component(*c) for c in self.components))

    def mismatch(self) -> float | None:
        """Relative difference of the computed product from the quoted total."""
        if self.quoted_total_efficiency is None:
            return None
        return abs(total_efficiency(self) - self.quoted_total_efficiency) / self.quoted_total_efficiency


def total_efficiency(channel: ChannelEfficiency) -> float:
    return math.prod(c.transmission for c in channel.components) * channel.detector.quantum_efficiency


def click_probability(mean_photons, detector: DetectorSpec):
    """Probability of a click for Poisson light of the given mean at the detector input."""
    mu = np.asarray(mean_photons, dtype=float)
    if np.any(mu < 0):
        raise ValueError("mean photon number must be nonnegative")
    p = 1.0 - (1.0 - detector.dark_count_prob_per_gate) * np.exp(-detector.quantum_efficiency * mu)
    return float(p) if p.ndim == 0 else p


def sample_clicks(photon_numbers, detector: DetectorSpec, rng: np.random.Generator) -> np.ndarray:
    """Clicks for explicit photon numbers: per-photon Bernoulli(QE) thinning ORed with a dark count."""
    n = np.asarray(photon_numbers, dtype=np.int64)
    detected = rng.binomial(n, detector.quantum_efficiency) > 0
    dark = rng.random(n.shape) < detector.dark_count_prob_per_gate
    return detected | dark


def gate_schedule(pump_rep_rate_mhz: float, decimation: int) -> float:
    """Detector gate rate in kHz when gating on every ``decimation``-th pump pulse."""
    if int(decimation) != decimation or decimation < 1:
        raise InvalidConfigurationError("decimation must be a positive integer")
    return pump_rep_rate_mhz * 1e3 / decimation


def gates_for_duration(duration_s: float, gate_rate_khz: float) -> int:
    return int(round(duration_s * gate_rate_khz * 1e3))
