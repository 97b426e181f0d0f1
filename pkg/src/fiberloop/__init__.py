"""Simulation and analysis of a fiber-loop source of polarization-entangled photon pairs."""

__version__ = "0.1.0"


class InvalidConfigurationError(ValueError):
    """Raised when a physical configuration violates its invariants."""


class FitError(RuntimeError):
    """Raised when a fringe fit cannot be performed."""
