"""``radcal`` command line: simulate | estimate | benchmark | report.

Exit codes: 0 success, 2 configuration error, 3 insufficient data, 4 I/O error.
Set ``RADCAL_LOG`` (e.g. ``DEBUG``) to change verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from radcal.benchmark import run_benchmark, write_tables
from radcal.config import BenchmarkConfig, EstimateConfig, ScenarioConfig, parse_config
from radcal.errors import InsufficientDataError, ValidationError
from radcal.io import (
    ResultsReport,
    read_imu_csv,
    read_odometry_csv,
    read_radar_csv,
    read_report,
    read_weights_csv,
    write_imu_csv,
    write_json,
    write_odometry_csv,
    write_radar_csv,
    write_report,
    write_trajectory_csv,
)
from radcal.pipeline import run_estimation
from radcal.sim import LABEL_NAMES, generate_scenario

EXIT_OK, EXIT_CONFIG, EXIT_NO_DATA, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("radcal")


class InputFileError(Exception):
    """Unreadable or malformed data file (exit code 4)."""


def _config_data(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ValidationError(f"{path}: not valid JSON ({err})") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    return data


def _load(model, path, overrides: dict):
    data = _config_data(path)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(model, data)


def cmd_simulate(args) -> int:
    cfg = _load(ScenarioConfig, args.config, {"seed": args.seed})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scene = generate_scenario(cfg)
    write_radar_csv(scene.frames, out / "radar.csv")
    write_imu_csv(scene.imu, out / "imu.csv")
    write_odometry_csv(*scene.odometry, out / "odometry.csv")
    write_trajectory_csv(scene.reference, out / "trajectory.csv")
    truth = {
        "mount": {"x_s": cfg.mount.x_s, "y_s": cfg.mount.y_s, "theta_deg": cfg.mount.theta_deg,
                  "theta_rad": math.radians(cfg.mount.theta_deg)},
        "imu_model": cfg.imu_model.model_dump(),
        "label_codes": {str(k): v for k, v in LABEL_NAMES.items()},
        "labels": [lab.tolist() for lab in scene.labels],
    }
    write_json(truth, out / "ground_truth.json")
    write_json(cfg.model_dump(mode="json"), out / "scenario_config.json")
    # estimator template: mount position is known, the angle is not
    template = EstimateConfig(mount={"x_s": cfg.mount.x_s, "y_s": cfg.mount.y_s, "theta_deg": 0.0})
    write_json(template.model_dump(mode="json"), out / "estimate_config.json")
    log.info("wrote %d frames, %d IMU samples to %s", len(scene.frames), len(scene.imu), out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    data = _config_data(args.config)
    if args.seed is not None:
        data["ransac"] = {**data.get("ransac", {}), "seed": args.seed}
    if args.weights is not None:
        data["weights"] = "external"
    if args.estimator is not None:
        data["estimator"] = args.estimator
    cfg = parse_config(EstimateConfig, data)

    try:
        frames = read_radar_csv(args.radar)
        imu = read_imu_csv(args.imu)
        odometry = read_odometry_csv(args.odometry) if args.odometry else None
        weights = read_weights_csv(args.weights, frames) if args.weights else None
    except ValidationError as err:
        raise InputFileError(str(err)) from err
    result = run_estimation(frames, imu, cfg, odometry, weights)

    report = ResultsReport(
        config=cfg.model_dump(mode="json"),
        seed=cfg.ransac.seed,
        solutions=result.solution_dicts(),
        frames=result.table.summary(),
        bias=result.table.bias,
        errors=result.errors or None,
        notes=result.table.notes or None,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report(report, out / "report.json")
    for name, sol in result.solutions.items():
        print(f"{name:7s} theta={sol.theta_deg:.6f} deg  scale={sol.scale:.6f}  frames={sol.frames_used}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    data = _config_data(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.estimator is not None:
        data["estimate"] = {**data.get("estimate", {}), "estimator": args.estimator}
    cfg = parse_config(BenchmarkConfig, data)
    report = run_benchmark(cfg, jobs=args.jobs)
    for p in write_tables(report, args.out):
        print(p)
    return EXIT_OK


def _summary_lines(data: dict) -> list[str]:
    lines = [f"radcal report (version {data.get('version', '?')}, seed {data.get('seed')})"]
    for name, sol in sorted(data.get("solutions", {}).items()):
        lines.append(f"  {name:7s} theta={sol['theta_deg']} deg  s'={sol['s_prime']}  frames={sol['frames_used']}")
    if "frames" in data:
        lines.append("  frames: " + ", ".join(f"{k}={v}" for k, v in sorted(data["frames"].items())))
    for row in data.get("mae_vs_interval", []):
        lines.append(f"  interval {row['interval_s']:>6} s  {row['estimator']:7s} "
                     f"MAE={row['mae_deg']:.5f} deg  var={row['var_deg2']:.3g} deg^2  (n={row['n']})")
    for row in data.get("outlier_sweep", []):
        lines.append(f"  movers {row['mover_ratio']:.2f} {row['weights']:6s} {row['estimator']:7s} "
                     f"MAE={row['mae_deg']:.5f} deg  var={row['var_deg2']:.3g} deg^2")
    for row in data.get("rte", []):
        lines.append(f"  bias {row['bias_deg']:.3f} deg  RTE={row['rte_m']:.4f} m")
    return lines


def cmd_report(args) -> int:
    try:
        data = read_report(args.report)
    except json.JSONDecodeError as err:
        raise InputFileError(f"{args.report}: not valid JSON ({err})") from err
    try:
        lines = _summary_lines(data)
    except (KeyError, TypeError, AttributeError) as err:
        raise InputFileError(f"{args.report}: not a radcal report ({err!r})") from err
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radcal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a synthetic scene to CSV/JSON files")
    p.add_argument("--config", help="ScenarioConfig JSON (defaults if omitted)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the mounting angle from radar + IMU CSV")
    p.add_argument("radar")
    p.add_argument("imu")
    p.add_argument("--config", help="EstimateConfig JSON")
    p.add_argument("--odometry", help="optional speed CSV (t_s,speed_mps)")
    p.add_argument("--weights", help="external per-detection weights CSV (t_s,weight)")
    p.add_argument("--estimator", choices=["wlsq", "mean", "kabsch", "odr", "all"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="RANSAC seed")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("benchmark", help="seeded sweeps over window length, outliers and angle bias")
    p.add_argument("--config", help="BenchmarkConfig JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--estimator", choices=["wlsq", "mean", "kabsch", "odr", "all"])
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("report", help="summarize a report.json")
    p.add_argument("report")
    p.add_argument("--out", help="also write the summary to this file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    level = logging.getLevelName(os.environ.get("RADCAL_LOG", "WARNING").upper())
    logging.basicConfig(level=level if isinstance(level, int) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDataError as err:
        print(f"insufficient data: {err}", file=sys.stderr)
        return EXIT_NO_DATA
    except (OSError, InputFileError) as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
