"""Two-photon polarization states, waveplates and analyzer projections.

Basis ordering is ``HH, HV, VH, VV`` with the signal photon first. Analyzer
angles are measured from the H axis; an analyzer at ``theta`` passes
``cos(theta)|H> + sin(theta)|V>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Union

import numpy as np

from . import InvalidConfigurationError

TOL = 1e-12

Channel = Literal["signal", "idler"]

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)


@dataclass(frozen=True)
class AnalyzerSetting:
    """Pass-axis angle of a polarization analyzer (HWP + PBS collapsed to one projector)."""

    theta: float

    def canonical(self) -> float:
        """Angle reduced to [0, pi); analyzers differing by pi are identical."""
        return float(np.mod(self.theta, np.pi))

    def __float__(self) -> float:
        return float(self.theta)


Angle = Union[float, AnalyzerSetting]


@dataclass(frozen=True)
class WaveplateElement:
    kind: Literal["half-wave", "quarter-wave"]
    axis_angle_rad: float

    def jones(self) -> np.ndarray:
        """2x2 Jones matrix in the H/V basis, fast axis at ``axis_angle_rad``."""
        if self.kind == "half-wave":
            retarder = np.diag([1.0, -1.0]).astype(complex)
        elif self.kind == "quarter-wave":
            retarder = np.diag([1.0, 1.0j])
        else:
            raise InvalidConfigurationError(f"unknown waveplate kind {self.kind!r}")
        c, s = np.cos(self.axis_angle_rad), np.sin(self.axis_angle_rad)
        rot = np.array([[c, -s], [s, c]], dtype=complex)
        return rot @ retarder @ rot.T


class TwoPhotonState:
    """Polarization state of one signal-idler pair, pure or mixed.

    Construct with :meth:`from_amplitudes` or :meth:`from_density_matrix`.
    Pure states keep their amplitude vector; both forms expose
    :attr:`density_matrix`, which is what equality is judged on.
    """

    __slots__ = ("_amplitudes", "_rho")

    def __init__(self, amplitudes: np.ndarray | None = None, density_matrix: np.ndarray | None = None):
        if (amplitudes is None) == (density_matrix is None):
            raise InvalidConfigurationError("give exactly one of amplitudes or density_matrix")
        if amplitudes is not None:
            psi = np.asarray(amplitudes, dtype=complex).reshape(4)
            norm = np.vdot(psi, psi).real
            if abs(norm - 1.0) > TOL:
                raise InvalidConfigurationError(f"amplitudes not normalized (norm^2 = {norm})")
            self._amplitudes = psi
            self._rho = np.outer(psi, psi.conj())
        else:
            rho = np.asarray(density_matrix, dtype=complex).reshape(4, 4)
            if not np.allclose(rho, rho.conj().T, atol=TOL, rtol=0):
                raise InvalidConfigurationError("density matrix not Hermitian")
            if abs(np.trace(rho).real - 1.0) > TOL:
                raise InvalidConfigurationError("density matrix trace != 1")
            if np.linalg.eigvalsh(rho).min() < -TOL:
                raise InvalidConfigurationError("density matrix has negative eigenvalues")
            self._amplitudes = None
            self._rho = rho
        self._rho.setflags(write=False)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "TwoPhotonState":
        psi = np.asarray(amplitudes, dtype=complex).reshape(4)
        if normalize:
            n = np.linalg.norm(psi)
            if n == 0:
                raise InvalidConfigurationError("zero amplitude vector")
            psi = psi / n
        return cls(amplitudes=psi)

    @classmethod
    def from_density_matrix(cls, rho) -> "TwoPhotonState":
        return cls(density_matrix=rho)

    @property
    def is_pure(self) -> bool:
        return self._amplitudes is not None

    @property
    def amplitudes(self) -> np.ndarray | None:
        return None if self._amplitudes is None else self._amplitudes.copy()

    @property
    def density_matrix(self) -> np.ndarray:
        return self._rho

    def equals(self, other: "TwoPhotonState", atol: float = TOL) -> bool:
        """Equality up to global phase."""
        return bool(np.allclose(self._rho, other._rho, atol=atol, rtol=0))

    def __repr__(self) -> str:
        if self.is_pure:
            return f"TwoPhotonState(amplitudes={np.round(self._amplitudes, 6)})"
        return "TwoPhotonState(<mixed>)"


def bell_state(name: str) -> TwoPhotonState:
    """Bell states in the source's naming (Psi = HH +/- VV, Phi = HV +/- VH)."""
    s = 1 / np.sqrt(2)
    table = {
        "psi+": [s, 0, 0, s],
        "psi-": [s, 0, 0, -s],
        "phi+": [0, s, s, 0],
        "phi-": [0, s, -s, 0],
    }
    try:
        return TwoPhotonState.from_amplitudes(table[name.lower()])
    except KeyError:
        raise ValueError(f"unknown Bell state {name!r}") from None


def make_source_state(power_h_mw: float, power_v_mw: float, phi_p: float) -> TwoPhotonState:
    """Pair state emitted by the loop for the given pump powers and pump phase.

    Each pair needs two pump photons, so the HH (VV) amplitude scales with
    the H (V) pump power and the relative pair phase is twice the pump phase.
    """
    if power_h_mw < 0 or power_v_mw < 0:
        raise InvalidConfigurationError("pump powers must be nonnegative")
    if power_h_mw == 0 and power_v_mw == 0:
        raise InvalidConfigurationError("at least one pump must be on")
    c_h, c_v = float(power_h_mw), float(power_v_mw)
    psi = np.array([c_h, 0.0, 0.0, c_v * np.exp(2j * phi_p)], dtype=complex)
    return TwoPhotonState.from_amplitudes(psi, normalize=True)


def apply_idler_waveplate(state: TwoPhotonState, plate: WaveplateElement) -> TwoPhotonState:
    u = np.kron(np.eye(2), plate.jones())
    if state.is_pure:
        return TwoPhotonState.from_amplitudes(u @ state.amplitudes, normalize=True)
    rho = u @ state.density_matrix @ u.conj().T
    return TwoPhotonState.from_density_matrix(0.5 * (rho + rho.conj().T))


def _pass_vectors(theta: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([c, s], dtype=complex), np.array([-s, c], dtype=complex)


def joint_outcome_probabilities(state: TwoPhotonState, theta_s: Angle, theta_i: Angle) -> np.ndarray:
    """Probabilities ``[pass-pass, pass-fail, fail-pass, fail-fail]`` (signal outcome first)."""
    ps, fs = _pass_vectors(float(theta_s))
    pi, fi = _pass_vectors(float(theta_i))
    rho = state.density_matrix
    out = np.empty(4)
    for k, (a, b) in enumerate(((ps, pi), (ps, fi), (fs, pi), (fs, fi))):
        v = np.kron(a, b)
        out[k] = np.vdot(v, rho @ v).real
    return np.clip(out, 0.0, 1.0)


def reduced_density_matrix(state: TwoPhotonState, channel: Channel) -> np.ndarray:
    r = state.density_matrix.reshape(2, 2, 2, 2)
    if channel == "signal":
        return np.einsum("ajbj->ab", r)
    if channel == "idler":
        return np.einsum("jajb->ab", r)
    raise ValueError(f"unknown channel {channel!r}")


def marginal_pass_probability(state: TwoPhotonState, channel: Channel, theta: Angle) -> float:
    p, _ = _pass_vectors(float(theta))
    rho1 = reduced_density_matrix(state, channel)
    return float(np.clip(np.vdot(p, rho1 @ p).real, 0.0, 1.0))
