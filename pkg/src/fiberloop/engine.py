"""Per-gate Monte Carlo of photon emission, analysis and gated detection.

Each gate samples FPS pairs, Raman photons and leaked pump photons,
projects them on the analyzers, thins them by the channel efficiency and
ORs the result with a dark count. Runs are split into fixed-size blocks
whose random streams depend only on ``(master_seed, block_index)``, so a
run gives the same counts however the blocks are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import InvalidConfigurationError
from .config import ApparatusConfig
from .detection import DetectorSpec
from .polarization import TwoPhotonState, joint_outcome_probabilities, marginal_pass_probability
from .source import EmissionRates, spm_post_analyzer_mean

DEFAULT_BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class CountRecord:
    gates: int
    singles_signal: int
    singles_idler: int
    coincidences: int
    dark_baseline: "CountRecord | None" = None

    def __post_init__(self):
        if self.coincidences > min(self.singles_signal, self.singles_idler):
            raise ValueError("coincidences exceed singles")
        if max(self.singles_signal, self.singles_idler) > self.gates or min(
                self.singles_signal, self.singles_idler, self.coincidences) < 0:
            raise ValueError("counts must lie in [0, gates]")

    def __add__(self, other: "CountRecord") -> "CountRecord":
        return CountRecord(
            self.gates + other.gates,
            self.singles_signal + other.singles_signal,
            self.singles_idler + other.singles_idler,
            self.coincidences + other.coincidences,
        )

    def with_dark(self, dark: "CountRecord") -> "CountRecord":
        return CountRecord(self.gates, self.singles_signal, self.singles_idler, self.coincidences, dark)


@dataclass(frozen=True)
class GateSettings:
    """Analyzer angles, pump phase and the two detection paths for one measurement setting.

    ``transmission_*`` is the optical transmission after the analyzer; the
    detector's quantum efficiency is applied on top of it.
    """

    theta_s: float
    theta_i: float
    phi_p: float
    transmission_s: float
    transmission_i: float
    detector_s: DetectorSpec
    detector_i: DetectorSpec

    @property
    def eta_s(self) -> float:
        return self.transmission_s * self.detector_s.quantum_efficiency

    @property
    def eta_i(self) -> float:
        return self.transmission_i * self.detector_i.quantum_efficiency


@dataclass(frozen=True)
class GateModel:
    """Flattened per-gate probabilities; cheap to pickle to worker processes.

    ``means`` holds the Poisson means of correlated pairs, unpaired signal
    and idler photons, Raman signal/idler (pre-analyzer) and leaked pump
    signal/idler (post-analyzer), in that order.
    """

    means: tuple[float, ...]
    joint: tuple[float, float, float, float]
    marginal_s: float
    marginal_i: float
    eta_s: float
    eta_i: float
    dark_s: float
    dark_i: float

    @classmethod
    def build(cls, rates: EmissionRates, state: TwoPhotonState, settings: GateSettings) -> "GateModel":
        a, xi = rates.pair_rate, rates.xi
        joint = joint_outcome_probabilities(state, settings.theta_s, settings.theta_i)
        return cls(
            means=(
                xi * a,
                (1 - xi) * a,
                (1 - xi) * a,
                rates.raman_signal,
                rates.raman_idler,
                spm_post_analyzer_mean(rates, "signal", settings.theta_s, settings.phi_p),
                spm_post_analyzer_mean(rates, "idler", settings.theta_i, settings.phi_p),
            ),
            joint=tuple(float(x) for x in joint / joint.sum()),
            marginal_s=marginal_pass_probability(state, "signal", settings.theta_s),
            marginal_i=marginal_pass_probability(state, "idler", settings.theta_i),
            eta_s=settings.eta_s,
            eta_i=settings.eta_i,
            dark_s=settings.detector_s.dark_count_prob_per_gate,
            dark_i=settings.detector_i.dark_count_prob_per_gate,
        )

    def blocked(self) -> "GateModel":
        """Same detectors with the pump blocked: dark counts only."""
        return GateModel((0.0,) * 7, self.joint, self.marginal_s, self.marginal_i,
                         self.eta_s, self.eta_i, self.dark_s, self.dark_i)


def simulate_gate(rates: EmissionRates, state: TwoPhotonState, settings: GateSettings,
                  rng: np.random.Generator) -> tuple[bool, bool]:
    """One gate, sampled population by population.

    Reference implementation of the per-gate procedure; :func:`run_counts`
    uses an equivalent vectorized sampler.
    """
    a, xi = rates.pair_rate, rates.xi
    joint = joint_outcome_probabilities(state, settings.theta_s, settings.theta_i)
    n_s = n_i = 0
    for _ in range(rng.poisson(a)):
        if rng.random() < xi:
            outcome = rng.choice(4, p=joint / joint.sum())
            n_s += outcome in (0, 1)
            n_i += outcome in (0, 2)
    # photons whose partner left the passband: independent, polarized per the marginals
    n_s += rng.binomial(rng.poisson((1 - xi) * a), marginal_pass_probability(state, "signal", settings.theta_s))
    n_i += rng.binomial(rng.poisson((1 - xi) * a), marginal_pass_probability(state, "idler", settings.theta_i))
    n_s += rng.binomial(rng.poisson(rates.raman_signal), 0.5)
    n_i += rng.binomial(rng.poisson(rates.raman_idler), 0.5)
    n_s += rng.poisson(spm_post_analyzer_mean(rates, "signal", settings.theta_s, settings.phi_p))
    n_i += rng.poisson(spm_post_analyzer_mean(rates, "idler", settings.theta_i, settings.phi_p))
    n_s = rng.binomial(n_s, settings.transmission_s)
    n_i = rng.binomial(n_i, settings.transmission_i)
    click_s = rng.binomial(n_s, settings.detector_s.quantum_efficiency) > 0 \
        or rng.random() < settings.detector_s.dark_count_prob_per_gate
    click_i = rng.binomial(n_i, settings.detector_i.quantum_efficiency) > 0 \
        or rng.random() < settings.detector_i.dark_count_prob_per_gate
    return bool(click_s), bool(click_i)


def bernoulli_positions(p: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sorted indices of the successes among ``n`` independent Bernoulli(p) trials.

    Gaps between successes are geometric, so the cost scales with the
    number of successes rather than with ``n``.
    """
    if p <= 0 or n <= 0:
        return np.empty(0, dtype=np.int64)
    if p >= 0.25:
        return np.flatnonzero(rng.random(n) < p)
    chunk = int(n * p + 6 * np.sqrt(n * p) + 16)
    parts, last = [], -1
    while last < n - 1:
        pos = last + np.cumsum(rng.geometric(p, chunk))
        parts.append(pos)
        last = int(pos[-1])
    pos = np.concatenate(parts)
    return pos[pos < n]


def _truncated_poisson(lam: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Poisson(lam) conditioned on being >= 1, by inverse CDF."""
    k = np.arange(1, 64)
    log_pmf = k * np.log(lam) - lam - np.cumsum(np.log(k))
    cdf = np.cumsum(np.exp(log_pmf))
    u = rng.random(size) * cdf[-1]
    return np.searchsorted(cdf, u, side="right") + 1


def simulate_block(model: GateModel, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the gates (out of ``n``) that click in the signal and idler detectors.

    The seven Poisson populations of a gate are drawn as their Poisson
    total followed by a multinomial split, which has the same joint
    distribution. Gates receiving no photon are skipped by drawing the
    occupied gates directly; dark counts are placed the same way.
    """
    means = np.asarray(model.means)
    total = means.sum()
    dark_s = bernoulli_positions(model.dark_s, n, rng)
    dark_i = bernoulli_positions(model.dark_i, n, rng)
    if total <= 0:
        return dark_s, dark_i
    if total < 10:
        idx = bernoulli_positions(-np.expm1(-total), n, rng)
        counts = _truncated_poisson(total, idx.size, rng)
    else:
        counts = rng.poisson(total, n)
        idx = np.flatnonzero(counts)
        counts = counts[idx]
    probs = means / total
    split = np.zeros((idx.size, 7), dtype=np.int64)
    single = counts == 1
    kind = np.searchsorted(np.cumsum(probs)[:-1], rng.random(int(single.sum())) * probs.sum(), side="right")
    split[np.flatnonzero(single), kind] = 1
    multi = ~single
    if multi.any():
        split[multi] = rng.multinomial(counts[multi], probs)

    pair_out = rng.multinomial(split[:, 0], model.joint)
    n_s = (pair_out[:, 0] + pair_out[:, 1]
           + rng.binomial(split[:, 1], model.marginal_s)
           + rng.binomial(split[:, 3], 0.5)
           + split[:, 5])
    n_i = (pair_out[:, 0] + pair_out[:, 2]
           + rng.binomial(split[:, 2], model.marginal_i)
           + rng.binomial(split[:, 4], 0.5)
           + split[:, 6])
    # transmission and quantum efficiency thin each photon independently, so one binomial suffices
    det_s = idx[rng.binomial(n_s, model.eta_s) > 0]
    det_i = idx[rng.binomial(n_i, model.eta_i) > 0]
    return np.union1d(det_s, dark_s), np.union1d(det_i, dark_i)


def block_rng(master_seed: int, block_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed) & ((1 << 64) - 1), spawn_key=(int(block_index),))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(master_seed: int, *key: int) -> int:
    """Independent 64-bit seed for a sub-run (grid point, dark run, replica)."""
    seq = np.random.SeedSequence(entropy=int(master_seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _count_blocks(model: GateModel, master_seed: int, blocks: list[tuple[int, int]]) -> tuple[int, int, int, int]:
    g = s = i = c = 0
    for k, size in blocks:
        cs, ci = simulate_block(model, size, block_rng(master_seed, k))
        g += size
        s += cs.size
        i += ci.size
        c += np.intersect1d(cs, ci, assume_unique=True).size
    return g, s, i, c


def count_gates(model: GateModel, gates: int, master_seed: int, block_size: int = DEFAULT_BLOCK_SIZE,
                workers: int = 1) -> CountRecord:
    if gates < 1:
        raise InvalidConfigurationError("gates must be >= 1")
    if block_size < 1:
        raise InvalidConfigurationError("block_size must be >= 1")
    n_blocks = math.ceil(gates / block_size)
    blocks = [(k, min(block_size, gates - k * block_size)) for k in range(n_blocks)]
    try:
        if workers <= 1 or n_blocks == 1:
            parts = [_count_blocks(model, master_seed, blocks)]
        else:
            chunks = [blocks[w::workers] for w in range(workers) if blocks[w::workers]]
            with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
                parts = list(pool.map(_count_blocks, [model] * len(chunks), [master_seed] * len(chunks), chunks))
    except MemoryError as e:
        raise RuntimeError(f"counting run exhausted memory; no partial counts kept ({e})") from None
    g, s, i, c = (sum(col) for col in zip(*parts))
    return CountRecord(g, s, i, c)


@dataclass(frozen=True)
class RunConfig:
    apparatus: ApparatusConfig
    gates: int
    master_seed: int
    theta_s: float = np.pi / 4
    theta_i: float = np.pi / 4
    phi_p: float | None = None
    block_size: int = DEFAULT_BLOCK_SIZE
    pump_blocked: bool = False

    def __post_init__(self):
        if self.gates < 1:
            raise InvalidConfigurationError("gates must be >= 1")
        if self.block_size < 1:
            raise InvalidConfigurationError("block_size must be >= 1")

    @property
    def pump_phase(self) -> float:
        return self.apparatus.pump.phi_p_rad if self.phi_p is None else self.phi_p

    def settings(self) -> GateSettings:
        app = self.apparatus
        return GateSettings(
            theta_s=float(self.theta_s),
            theta_i=float(self.theta_i),
            phi_p=self.pump_phase,
            transmission_s=app.transmission("signal"),
            transmission_i=app.transmission("idler"),
            detector_s=app.signal_channel.detector,
            detector_i=app.idler_channel.detector,
        )

    def model(self) -> GateModel:
        m = GateModel.build(self.apparatus.rates(), self.apparatus.state(self.pump_phase), self.settings())
        return m.blocked() if self.pump_blocked else m


def run_counts(config: RunConfig, workers: int = 1) -> CountRecord:
    """Accumulate singles and coincidences over ``config.gates`` gates."""
    return count_gates(config.model(), config.gates, config.master_seed, config.block_size, workers)
