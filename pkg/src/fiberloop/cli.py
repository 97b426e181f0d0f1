"""Command-line entry point: ``fiberloop simulate|calibrate|oracle|validate-config``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import FitError, InvalidConfigurationError
from .config import load_config
from .experiment import (
    compare_at_pair_rate,
    run_calibration,
    scenario_analyzer_scan,
    scenario_phase_scan,
    scenario_power_sweep,
    twenty_second_gates,
)
from .oracle import expected_coincidence, expected_visibility


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _emit(obj, out: str | None, name: str) -> None:
    text = json.dumps(obj, indent=2, default=float)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text + "\n")
    print(text)


def _config(args):
    cfg = load_config(args.config)
    if getattr(args, "power", None) is not None:
        cfg = cfg.with_power(args.power)
    return cfg


def cmd_simulate(args) -> None:
    cfg = _config(args)
    gates = args.gates or twenty_second_gates(cfg, args.seconds)
    if args.scan == "phase-scan":
        grid = np.linspace(0, 2 * np.pi, args.points, endpoint=False)
        res = scenario_phase_scan(cfg, grid, gates, args.seed, np.deg2rad(args.theta_s_deg),
                                  np.deg2rad(args.theta_i_deg), workers=args.workers)
    elif args.scan == "analyzer-scan":
        grid = np.linspace(0, np.pi, args.points, endpoint=False)
        res = scenario_analyzer_scan(cfg, grid, gates, args.seed, np.deg2rad(args.theta_s_deg),
                                     workers=args.workers)
    else:
        powers = _floats(args.powers)
        res = scenario_power_sweep(cfg, powers, args.gates if args.gates is not None else gates, args.seed,
                                   scan_points=args.points, workers=args.workers)
    summary = res.sidecar()
    if args.out:
        csv_path, json_path = res.write(args.out)
        summary["files"] = [str(csv_path), str(json_path)]
    print(json.dumps(summary, indent=2, default=float))


def cmd_calibrate(args) -> None:
    base = load_config(args.config).emission if args.config else None
    targets = [_floats(t) for t in args.targets]
    for t in targets:
        if len(t) != 3:
            raise InvalidConfigurationError(f"target {t} must be power_mw,total_photons,pair_rate")
    cal = run_calibration(targets, base, fit_spm=args.fit_spm)
    _emit({
        "coefficients": asdict(cal.coefficients),
        "pair_residuals": cal.pair_residuals,
        "background_residuals": cal.background_residuals,
        "max_relative_residual": cal.max_relative_residual,
    }, args.out, "calibration.json")


def cmd_oracle(args) -> None:
    cfg = _config(args)
    rates = cfg.rates()
    eta_s, eta_i = cfg.detection_efficiency("signal"), cfg.detection_efficiency("idler")
    d_s = cfg.signal_channel.detector.dark_count_prob_per_gate
    d_i = cfg.idler_channel.detector.dark_count_prob_per_gate
    th_s, th_i = np.deg2rad(args.theta_s_deg), np.deg2rad(args.theta_i_deg)
    pred = expected_coincidence(rates, eta_s, eta_i, th_s, th_i, cfg.pump.phi_p_rad, cfg.state(), d_s, d_i)
    out = {
        "config": cfg.name,
        "config_hash": cfg.config_hash(),
        "rates": asdict(rates),
        "eta_signal": eta_s,
        "eta_idler": eta_i,
        "prediction_per_gate": {**asdict(pred), "total_coincidence": pred.total_coincidence},
        "visibility": {
            kind: expected_visibility(rates, eta_s, eta_i, kind, theta_s=th_s) for kind in ("phase-scan", "analyzer-scan")
        },
    }
    if args.pair_rate is not None:
        out["at_pair_rate"] = compare_at_pair_rate([cfg], args.pair_rate)
    _emit(out, args.out, "oracle.json")


def cmd_validate(args) -> None:
    cfg = load_config(args.config)
    out = {"valid": True, "name": cfg.name, "config_hash": cfg.config_hash(), "warnings": cfg.validate()}
    if args.dump:
        out["config"] = cfg.to_dict()
    _emit(out, args.out, "validation.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fiberloop", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", required=True, help="preset name (dgfawg, cwdmf) or JSON file")
        p.add_argument("--out", help="output directory")
        if seed:
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--gates", type=int, help="gates per point (default: 20 s equivalent)")

    sim = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    sim.add_argument("scan", choices=["phase-scan", "analyzer-scan", "power-sweep"])
    common(sim)
    sim.add_argument("--seconds", type=float, default=20.0, help="integration time per point if --gates is unset")
    sim.add_argument("--points", type=int, default=72)
    sim.add_argument("--power", type=float, help="per-arm pump power in mW (overrides the config)")
    sim.add_argument("--powers", default="0.02,0.05,0.1,0.15,0.2", help="comma-separated powers for power-sweep")
    sim.add_argument("--theta-s-deg", type=float, default=45.0)
    sim.add_argument("--theta-i-deg", type=float, default=45.0)
    sim.add_argument("--workers", type=int, default=1)
    sim.set_defaults(func=cmd_simulate)

    cal = sub.add_parser("calibrate", help="fit emission coefficients to operating points")
    cal.add_argument("targets", nargs="+", help="power_mw,total_photons,pair_rate")
    cal.add_argument("--config", help="config whose SPM law is held fixed or refined")
    cal.add_argument("--fit-spm", action="store_true")
    cal.add_argument("--out")
    cal.set_defaults(func=cmd_calibrate)

    orc = sub.add_parser("oracle", help="closed-form rates and visibilities")
    common(orc, seed=False)
    orc.add_argument("--power", type=float)
    orc.add_argument("--pair-rate", type=float, help="also report the power and visibility at this pair rate")
    orc.add_argument("--theta-s-deg", type=float, default=45.0)
    orc.add_argument("--theta-i-deg", type=float, default=45.0)
    orc.set_defaults(func=cmd_oracle)

    val = sub.add_parser("validate-config", help="check a configuration")
    common(val, seed=False)
    val.add_argument("--dump", action="store_true", help="include the full configuration")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (InvalidConfigurationError, FitError, ValueError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
