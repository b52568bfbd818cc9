"""Command-line entry point: train, evaluate, simulate, calibrate-tension, serve, report."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from ..controller import save_tension_model
from ..estimators.io import save_model
from .config import ExperimentConfig, load_config, save_config
from .experiments import (
    make_subject,
    run_force_estimation_experiment,
    run_prosthesis_control_experiment,
    run_tension_calibration,
    save_report,
    load_report,
    train_control_estimator,
)


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    subject = make_subject(cfg, args.subject)
    model, scale, dataset = train_control_estimator(cfg, subject, args.subject)
    save_model(out / f"{cfg.estimator}_model.json", model, scale=scale, seed=cfg.seed)
    dataset.save_csv(out / "training_data.csv")
    save_config(out / "config.json", cfg)
    print(f"trained {cfg.estimator} on subject {args.subject} "
          f"({len(dataset.force)} samples) -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    report = run_force_estimation_experiment(cfg)["report"]
    save_report(out / "estimation_report.json", report)
    for name, stats in report["summary"].items():
        print(f"{name:18s} test R2 {stats['mean_test_r2']:.3f}  "
              f"RMSE {stats['mean_test_rmse']:.3f}  "
              f"drop {stats['generalization_drop']:+.4f}")
    if report["random_forest_flagged"]:
        print("note: random forest produced negative test R2 on some subjects")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    result = run_prosthesis_control_experiment(cfg, duration=args.duration)
    save_report(out / "control_report.json", result["report"])
    result["record"].save_csv(out / "control_record.csv")
    result["record"].save_trajectory_csv(out / "control_trajectory.csv")
    for key in ("tracking_rmse_N", "targeting_rmse_N", "reaching_rmse_N"):
        print(f"{key}: {result['report']['metrics'][key]:.3f}")
    return 0


def cmd_calibrate_tension(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    result = run_tension_calibration(cfg)
    save_report(out / "calibration_report.json", result["report"])
    save_tension_model(out / "tension_model.json", result["surface"], result["curve"])
    metrics = result["report"]["metrics"]
    print(f"tension model: R2 {metrics['r_squared']:.3f}  RMSE {metrics['rmse_N']:.3f} N "
          f"({metrics['n_samples']} samples)")
    return 0


def cmd_serve(args) -> int:
    from .server import serve_console

    cfg = _load_cfg(args)
    out = _out_dir(args)
    print(f"serving on {args.host}:{args.port} (duration {args.duration or cfg.pattern_duration} s)")
    result = serve_console(cfg, args.port, host=args.host,
                           duration=args.duration, out_dir=out, pace=args.pace)
    metrics = result["report"]["metrics"]
    print(f"session done: tracking RMSE {metrics['tracking_rmse_N']:.3f} N")
    return 0


def cmd_report(args) -> int:
    report = load_report(args.path)
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emgfinger",
                                     description="EMG-driven prosthetic finger testbed")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("train", help="train the online estimator for one subject")
    common(p)
    p.add_argument("--subject", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="offline estimator comparison across subjects")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="scripted closed-loop control run")
    common(p)
    p.add_argument("--duration", type=float, default=None, help="seconds of simulated time")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate-tension", help="fit the force-to-tension model")
    common(p)
    p.set_defaults(func=cmd_calibrate_tension)

    p = sub.add_parser("serve", help="run a live teleoperation session")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--pace", type=float, default=1.0,
                   help="wall seconds per simulated second (0 = unpaced)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="pretty-print a saved JSON report")
    p.add_argument("path")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
