"""Scenario runners reproducing the phase scan, the analyzer scan and a pump-power sweep.

Every scan point is a Monte Carlo run plus a pump-blocked dark run over the
same number of gates. Seeds for each run are derived from the scenario
seed and the point index, so results do not depend on worker count.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import FitError, InvalidConfigurationError, __version__
from .analysis import FringeFit, FringeSeries, dark_coincidence_baseline, fit_fringe, singles_fringe_phases, \
    subtract_dark
from .calibration import Calibration, OperatingPoint, calibrate
from .config import ApparatusConfig
from .detection import gates_for_duration
from .engine import CountRecord, RunConfig, derive_seed, run_counts
from .oracle import expected_coincidence, expected_visibility

log = logging.getLogger(__name__)

CSV_COLUMNS = ("x_value", "singles_s", "singles_i", "coincidences", "dark_s", "dark_i",
               "dark_coincidences", "gates", "dark_gates", "pump_monitor", "config_hash")

PHASE_SCAN_POINTS = 72
ANALYZER_SCAN_POINTS = 72


def twenty_second_gates(config: ApparatusConfig, seconds: float = 20.0) -> int:
    """Gate count equivalent to an integration time at the configured gate rate."""
    return gates_for_duration(seconds, config.gate_rate_khz)


@dataclass
class ScanPoint:
    x: float
    counts: CountRecord
    pump_monitor: float | None = None


@dataclass
class ScenarioResult:
    name: str
    config: ApparatusConfig
    seed: int
    x_label: str
    points: list[ScanPoint]
    fits: dict[str, FringeFit] = field(default_factory=dict)
    oracle: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()

    @property
    def visibility(self) -> float:
        return self.fits["coincidences"].visibility

    def column(self, name: str) -> np.ndarray:
        return np.array([_row(p, "")[name] for p in self.points], dtype=float)

    def provenance(self) -> dict[str, Any]:
        return {"config_hash": self.config_hash, "seed": self.seed, "version": __version__,
                "config_name": self.config.name}

    def sidecar(self) -> dict[str, Any]:
        return {
            "scenario": self.name,
            "x_label": self.x_label,
            "provenance": self.provenance(),
            "fits": {k: fit_to_dict(f) for k, f in self.fits.items()},
            "oracle": self.oracle,
            "diagnostics": self.diagnostics,
        }

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.name}.csv"
        json_path = out / f"{self.name}.json"
        write_scan_csv(csv_path, self.points, self.config_hash)
        json_path.write_text(json.dumps(self.sidecar(), indent=2, default=float) + "\n")
        return csv_path, json_path


def fit_to_dict(fit: FringeFit) -> dict[str, float]:
    d = asdict(fit)
    d["visibility"] = fit.visibility
    d["phase_offset"] = fit.phase_offset
    return d


def _row(p: ScanPoint, config_hash: str) -> dict[str, Any]:
    c, d = p.counts, p.counts.dark_baseline
    dark_coinc = 0.0 if d is None else float(dark_coincidence_baseline(
        c.gates, c.singles_signal, c.singles_idler, c.coincidences, d.singles_signal, d.singles_idler, d.gates))
    return {
        "x_value": repr(float(p.x)),
        "singles_s": c.singles_signal,
        "singles_i": c.singles_idler,
        "coincidences": c.coincidences,
        "dark_s": 0 if d is None else d.singles_signal,
        "dark_i": 0 if d is None else d.singles_idler,
        "dark_coincidences": repr(dark_coinc),
        "gates": c.gates,
        "dark_gates": c.gates if d is None else d.gates,
        "pump_monitor": "" if p.pump_monitor is None else repr(float(p.pump_monitor)),
        "config_hash": config_hash,
    }


def write_scan_csv(path: str | Path, points: Sequence[ScanPoint], config_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for p in points:
            w.writerow(_row(p, config_hash))


def read_scan_csv(path: str | Path) -> list[ScanPoint]:
    points = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            dark = CountRecord(int(r["dark_gates"]), int(r["dark_s"]), int(r["dark_i"]), 0)
            counts = CountRecord(int(r["gates"]), int(r["singles_s"]), int(r["singles_i"]),
                                 int(r["coincidences"]), dark)
            pm = float(r["pump_monitor"]) if r["pump_monitor"] else None
            points.append(ScanPoint(float(r["x_value"]), counts, pm))
    return points


def series_from_points(points: Sequence[ScanPoint], quantity: str, x_scale: float = 1.0) -> FringeSeries:
    """Fringe series of ``singles_s``, ``singles_i``, ``coincidences`` or ``pump_monitor``.

    Count series carry their dark baseline; for coincidences that baseline is
    the dark-attributable coincidence estimate.
    """
    x = np.array([p.x for p in points]) * x_scale
    gates = points[0].counts.gates
    if quantity == "pump_monitor":
        return FringeSeries(x, [p.pump_monitor for p in points], gates_per_point=gates)
    rows = [_row(p, "") for p in points]
    y = [r[quantity] for r in rows]
    if quantity == "coincidences":
        dark = [float(r["dark_coincidences"]) for r in rows]
        return FringeSeries(x, y, dark, gates_per_point=gates)
    dark_key = {"singles_s": "dark_s", "singles_i": "dark_i"}[quantity]
    return FringeSeries(x, y, [r[dark_key] for r in rows], gates_per_point=gates,
                        dark_gates_per_point=int(rows[0]["dark_gates"]))


def _run_point(config: ApparatusConfig, gates: int, seed: int, index: int, workers: int, **angles) -> CountRecord:
    rc = RunConfig(config, gates, derive_seed(seed, index, 0), **angles)
    counts = run_counts(rc, workers)
    dark = run_counts(RunConfig(config, gates, derive_seed(seed, index, 1), pump_blocked=True, **angles), workers)
    return counts.with_dark(dark)


def _check_span(grid: np.ndarray, period: float, what: str) -> None:
    n = grid.size
    if n < 4 or grid.max() - grid.min() < period * (n - 1) / n - 1e-9:
        raise InvalidConfigurationError(f"{what} grid must have >= 4 points spanning {period:.4g} rad")


def _validated(config: ApparatusConfig) -> ApparatusConfig:
    for w in config.validate():
        log.warning("%s: %s", config.name, w)
    return config


def _fit_or_none(series: FringeSeries, k: float) -> FringeFit | None:
    try:
        return fit_fringe(series, k)
    except FitError as e:
        log.warning("fit failed: %s", e)
        return None


def scenario_phase_scan(config: ApparatusConfig, phi_p_grid=None, gates_per_point: int | None = None,
                        seed: int = 0, theta_s: float = np.pi / 4, theta_i: float = np.pi / 4,
                        workers: int = 1) -> ScenarioResult:
    """Both analyzers fixed, pump phase scanned.

    Coincidences are fitted against the pair phase 2*phi_p (k = 1); singles
    and the pump monitor against phi_p (k = 1).
    """
    config = _validated(config)
    grid = np.linspace(0, 2 * np.pi, PHASE_SCAN_POINTS, endpoint=False) if phi_p_grid is None \
        else np.asarray(phi_p_grid, dtype=float)
    _check_span(grid, 2 * np.pi, "phase-scan")
    gates = gates_per_point or twenty_second_gates(config)
    points = []
    for n, phi in enumerate(grid):
        counts = _run_point(config, gates, seed, n, workers, theta_s=theta_s, theta_i=theta_i, phi_p=float(phi))
        # polarizer behind the rejected pump, pump arms at +-45 deg: one-photon fringe in phi_p
        points.append(ScanPoint(float(phi), counts, pump_monitor=0.5 * (1 + np.cos(phi))))

    res = ScenarioResult("phase_scan", config, seed, "phi_p_rad", points)
    coinc = subtract_dark(series_from_points(points, "coincidences", x_scale=2.0))
    res.fits["coincidences"] = fit_fringe(coinc, 1.0)
    for q in ("singles_s", "singles_i"):
        res.fits[q] = fit_fringe(subtract_dark(series_from_points(points, q)), 1.0)
    res.fits["pump_monitor"] = fit_fringe(series_from_points(points, "pump_monitor"), 1.0)
    d_s, d_i = singles_fringe_phases(subtract_dark(series_from_points(points, "singles_s")),
                                     subtract_dark(series_from_points(points, "singles_i")),
                                     series_from_points(points, "pump_monitor"))
    res.diagnostics = {
        "singles_phase_offset_signal_rad": d_s,
        "singles_phase_offset_idler_rad": d_i,
        "singles_signal_fringe_significance": res.fits["singles_s"].amplitude_significance,
        "singles_idler_fringe_significance": res.fits["singles_i"].amplitude_significance,
        "gates_per_point": gates,
    }
    res.oracle = _oracle_summary(config, "phase-scan", theta_s=theta_s, theta_i=theta_i)
    return res


def scenario_analyzer_scan(config: ApparatusConfig, theta_i_grid=None, gates_per_point: int | None = None,
                           seed: int = 0, theta_s: float = np.pi / 4, phi_p: float | None = None,
                           workers: int = 1) -> ScenarioResult:
    """Signal analyzer fixed, idler analyzer rotated; all fringes fitted with k = 2 in the angle."""
    config = _validated(config)
    grid = np.linspace(0, np.pi, ANALYZER_SCAN_POINTS, endpoint=False) if theta_i_grid is None \
        else np.asarray(theta_i_grid, dtype=float)
    _check_span(grid, np.pi, "analyzer-scan")
    gates = gates_per_point or twenty_second_gates(config)
    phi = config.pump.phi_p_rad if phi_p is None else phi_p
    points = [ScanPoint(float(th), _run_point(config, gates, seed, n, workers,
                                              theta_s=theta_s, theta_i=float(th), phi_p=phi))
              for n, th in enumerate(grid)]
    res = ScenarioResult("analyzer_scan", config, seed, "theta_i_rad", points)
    res.fits["coincidences"] = fit_fringe(subtract_dark(series_from_points(points, "coincidences")), 2.0)
    for q in ("singles_s", "singles_i"):
        res.fits[q] = fit_fringe(subtract_dark(series_from_points(points, q)), 2.0)
    res.diagnostics = {
        "singles_signal_fringe_significance": res.fits["singles_s"].amplitude_significance,
        "singles_idler_fringe_significance": res.fits["singles_i"].amplitude_significance,
        "coincidence_maximum_theta_i_rad": float(np.mod(res.fits["coincidences"].phase, np.pi)),
        "gates_per_point": gates,
    }
    res.oracle = _oracle_summary(config, "analyzer-scan", theta_s=theta_s, phi_p=phi)
    return res


def _oracle_summary(config: ApparatusConfig, scan_kind: str, **angles) -> dict[str, Any]:
    rates = config.rates()
    eta_s, eta_i = config.detection_efficiency("signal"), config.detection_efficiency("idler")
    d_s = config.signal_channel.detector.dark_count_prob_per_gate
    d_i = config.idler_channel.detector.dark_count_prob_per_gate
    return {
        "pair_rate": rates.pair_rate,
        "total_photons_signal": rates.total("signal"),
        "total_photons_idler": rates.total("idler"),
        "eta_signal": eta_s,
        "eta_idler": eta_i,
        "visibility": expected_visibility(rates, eta_s, eta_i, scan_kind, **angles),
        "visibility_raw": expected_visibility(rates, eta_s, eta_i, scan_kind, dark_s=d_s, dark_i=d_i,
                                              dark_subtracted=False, **angles),
    }


def scenario_power_sweep(config: ApparatusConfig, power_grid: Sequence[float], gates_per_point: int | None = None,
                         seed: int = 0, scan_points: int = 24, workers: int = 1) -> ScenarioResult:
    """Oracle and Monte Carlo analyzer-scan visibility versus per-arm pump power.

    The Monte Carlo visibility at each power comes from a ``scan_points``
    analyzer scan; set ``gates_per_point=0`` for an oracle-only sweep.
    """
    config = _validated(config)
    powers = np.asarray(power_grid, dtype=float)
    if powers.size == 0 or np.any(powers <= 0):
        raise InvalidConfigurationError("powers must be positive")
    gates = twenty_second_gates(config) if gates_per_point is None else gates_per_point
    theta_grid = np.linspace(0, np.pi, scan_points, endpoint=False)
    rows, points = [], []
    for n, p in enumerate(powers):
        cfg = config.with_power(float(p))
        summary = _oracle_summary(cfg, "analyzer-scan")
        row = {"power_mw": float(p), **summary, "mc_visibility": None, "mc_sigma_visibility": None}
        if gates > 0:
            scan = scenario_analyzer_scan(cfg, theta_grid, gates, derive_seed(seed, n), workers=workers)
            row["mc_visibility"] = scan.visibility
            row["mc_sigma_visibility"] = scan.fits["coincidences"].sigma_visibility
            total = sum((pt.counts for pt in scan.points[1:]), scan.points[0].counts)
            dark = sum((pt.counts.dark_baseline for pt in scan.points[1:]), scan.points[0].counts.dark_baseline)
            points.append(ScanPoint(float(p), total.with_dark(dark)))
        rows.append(row)
    res = ScenarioResult("power_sweep", config, seed, "power_mw", points)
    res.diagnostics = {"sweep": rows}
    return res


def compare_at_pair_rate(configs: Sequence[ApparatusConfig], pair_rate: float) -> dict[str, dict[str, float]]:
    """Oracle visibility of each configuration at the power giving ``pair_rate`` pairs/pulse."""
    out = {}
    for cfg in configs:
        p = float(np.sqrt(pair_rate / cfg.emission.c_fps_per_mw2))
        c = cfg.with_power(p)
        s = _oracle_summary(c, "analyzer-scan")
        out[cfg.name] = {"power_mw": p, "visibility": s["visibility"], "total_photons": s["total_photons_signal"]}
    return out


def run_calibration(targets: Sequence[Sequence[float]], base=None, fit_spm: bool = False) -> Calibration:
    return calibrate([OperatingPoint(*t) for t in targets], base, fit_spm=fit_spm)
