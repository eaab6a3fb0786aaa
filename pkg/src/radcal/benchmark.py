"""Seeded benchmark sweeps: convergence vs. window length, outlier robustness, RTE vs. angle bias.

Work is split into independent cells (one simulated scene each). Every cell
derives its randomness from the benchmark seed and its own index, so running
cells in parallel gives the same output as running them serially.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from radcal.config import BenchmarkConfig, NoiseConfig, ScenarioConfig, mixed_turn_segments
from radcal.core import MountPose
from radcal.errors import RadcalError
from radcal.io import ResultsReport, write_report
from radcal.pipeline import process_frames, solve
from radcal.sim import generate_scenario
from radcal.traj import Trajectory, reconstruct_trajectory, segment_errors

log = logging.getLogger(__name__)

ACCEL_TIME = 3.0


def _scene(base: ScenarioConfig, seed: int, driving_time: float, **update) -> ScenarioConfig:
    segs = mixed_turn_segments(driving_time, accel_time=ACCEL_TIME)
    data = base.model_dump()
    data.update(seed=seed, duration=base.stationary_duration + driving_time, segments=[s.model_dump() for s in segs])
    data.update(update)
    return ScenarioConfig.model_validate(data)


def outlier_scenario_config(cfg: BenchmarkConfig, mover_ratio: float, seed_index: int) -> ScenarioConfig:
    return _scene(cfg.scenario, cfg.seed + seed_index, cfg.outlier_duration, mover_ratio=mover_ratio)


def convergence_scenario_config(cfg: BenchmarkConfig, noise_index: int, seed_index: int) -> ScenarioConfig:
    driving = ACCEL_TIME + max(cfg.intervals)
    update = {}
    if cfg.noise_levels:
        lvl = cfg.noise_levels[noise_index]
        imu = cfg.scenario.imu_model.model_dump()
        imu["noise_std"] = lvl.imu_noise_std
        update = {"noise": {"sigma_doppler": lvl.sigma_doppler, "sigma_azimuth": lvl.sigma_azimuth},
                  "imu_model": imu}
    return _scene(cfg.scenario, cfg.seed + seed_index, driving, **update)


def _truth(sc: ScenarioConfig) -> float:
    return sc.mount.theta_deg


def _err(theta_deg: float, truth_deg: float) -> float:
    return (theta_deg - truth_deg + 180.0) % 360.0 - 180.0


def _convergence_cell(cfg: BenchmarkConfig, noise_index: int, seed_index: int) -> list[dict]:
    sc = convergence_scenario_config(cfg, noise_index, seed_index)
    scene = generate_scenario(sc)
    table = process_frames(scene.frames, scene.imu, cfg.estimate, odometry=scene.odometry)
    start = sc.stationary_duration + ACCEL_TIME
    rows = []
    for interval in cfg.intervals:
        n_win = int(math.floor(max(cfg.intervals) / interval + 1e-9))
        for w in range(n_win):
            t0 = start + w * interval
            idx = table.usable(t0, t0 + interval)
            try:
                res = solve(table, cfg.estimate, idx)
            except RadcalError as err:
                rows.append({"noise_index": noise_index, "seed": sc.seed, "interval_s": interval, "window": w,
                             "estimator": "*", "failed": str(err)})
                continue
            for name, sol in res.solutions.items():
                rows.append({"noise_index": noise_index, "seed": sc.seed, "interval_s": interval, "window": w,
                             "estimator": name, "theta_deg": sol.theta_deg,
                             "error_deg": _err(sol.theta_deg, _truth(sc))})
    return rows


def _outlier_cell(cfg: BenchmarkConfig, ratio: float, seed_index: int) -> list[dict]:
    sc = outlier_scenario_config(cfg, ratio, seed_index)
    scene = generate_scenario(sc)
    rows = []
    for weights in ("ransac", "unit"):
        est_cfg = cfg.estimate.model_copy(update={"weights": weights})
        try:
            res = solve(process_frames(scene.frames, scene.imu, est_cfg, odometry=scene.odometry), est_cfg)
        except RadcalError as err:
            rows.append({"mover_ratio": ratio, "seed": sc.seed, "weights": weights, "estimator": "*",
                         "failed": str(err)})
            continue
        for name, sol in res.solutions.items():
            rows.append({"mover_ratio": ratio, "seed": sc.seed, "weights": weights, "estimator": name,
                         "theta_deg": sol.theta_deg, "s_prime": sol.s_prime,
                         "error_deg": _err(sol.theta_deg, _truth(sc))})
    return rows


def rte_scenario_config(cfg: BenchmarkConfig) -> ScenarioConfig:
    r = cfg.rte
    driving = ACCEL_TIME + r.route_length / r.speed
    segs = mixed_turn_segments(driving, speed=r.speed, yaw_amplitude=r.yaw_amplitude,
                               accel_time=ACCEL_TIME, speed_swing=0.0)
    data = cfg.scenario.model_dump()
    data.update(seed=cfg.seed, duration=cfg.scenario.stationary_duration + driving,
                segments=[s.model_dump() for s in segs], noise=NoiseConfig().model_dump(),
                mover_ratio=0.0, clutter_ratio=0.0, accel_doppler_coeff=0.0)
    # angle is the only controlled error: exact yaw rates and radar motion
    data["imu_model"] = {**data["imu_model"], "noise_std": 0.0, "scale": 1.0}
    return ScenarioConfig.model_validate(data)


def rte_vs_angle_bias(cfg: BenchmarkConfig) -> list[dict]:
    """RTE of trajectories rebuilt from fixed (clean) radar motion with a biased mounting angle."""
    sc = rte_scenario_config(cfg)
    scene = generate_scenario(sc)
    table = process_frames(scene.frames, scene.imu, cfg.estimate, odometry=scene.odometry)
    moving = [k for k, e in enumerate(table.estimates)
              if e is not None and table.t[k] >= sc.stationary_duration + ACCEL_TIME]
    motions = [table.estimates[k] for k in moving]
    omega = table.omega[moving]
    t0, t1 = motions[0].t, motions[-1].t
    ref = scene.reference
    keep = (ref.t >= t0) & (ref.t <= t1)
    reference = Trajectory(ref.t[keep], ref.x[keep], ref.y[keep], ref.heading[keep])
    x0, y0, h0 = reference.pose_at(t0)
    rows = []
    for bias in cfg.rte.angle_biases_deg:
        mount = MountPose(sc.mount.x_s, sc.mount.y_s, math.radians(sc.mount.theta_deg + bias))
        est = reconstruct_trajectory(motions, mount, omega, start=(float(x0), float(y0), float(h0)))
        errs = segment_errors(est, reference, cfg.rte.segment_length, cfg.rte.align_heading)
        rows.append({"bias_deg": bias, "angle_deg": sc.mount.theta_deg + bias, "rte_m": float(np.mean(errs)),
                     "segments": int(errs.size)})
    return rows


def _run_cell(args):
    kind, cfg_json, a, b = args
    cfg = BenchmarkConfig.model_validate_json(cfg_json)
    if kind == "convergence":
        return _convergence_cell(cfg, a, b)
    if kind == "outlier":
        return _outlier_cell(cfg, a, b)
    return rte_vs_angle_bias(cfg)


def _aggregate(rows, keys):
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if "error_deg" in r:
            groups.setdefault(tuple(r[k] for k in keys), []).append(r["error_deg"])
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(x) if isinstance(x, str) else x for x in k)):
        e = np.array(groups[key])
        out.append({**dict(zip(keys, key)), "n": int(e.size), "mae_deg": float(np.mean(np.abs(e))),
                    "mean_error_deg": float(np.mean(e)), "var_deg2": float(np.var(e))})
    return out


def run_benchmark(cfg: BenchmarkConfig, jobs: int = 1) -> ResultsReport:
    n_noise = max(len(cfg.noise_levels), 1)
    cfg_json = cfg.model_dump_json()
    cells = [("convergence", cfg_json, i, s) for i in range(n_noise) for s in range(cfg.seeds) if cfg.intervals]
    cells += [("outlier", cfg_json, r, s) for r in cfg.mover_ratios for s in range(cfg.seeds)]
    if cfg.rte.enabled:
        cells.append(("rte", cfg_json, None, None))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]

    conv, outl, rte_rows = [], [], None
    for (kind, *_), rows in zip(cells, results):
        if kind == "convergence":
            conv.extend(rows)
        elif kind == "outlier":
            outl.extend(rows)
        else:
            rte_rows = rows
    failed = [r for r in conv + outl if "failed" in r]
    scenes = [r for r in outl if "error_deg" in r]
    return ResultsReport(
        config=cfg.model_dump(mode="json"),
        seed=cfg.seed,
        mae_vs_interval=_aggregate(conv, ("noise_index", "interval_s", "estimator")) or None,
        outlier_sweep=_aggregate(outl, ("mover_ratio", "weights", "estimator")) or None,
        scenes=scenes or None,
        rte=rte_rows,
        notes=[f"{len(failed)} cell windows failed"] if failed else None,
    )


def _write_csv(path: Path, rows: list[dict], columns: list[str]):
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})


def write_tables(report: ResultsReport, out_dir) -> list[Path]:
    """Plot-ready CSVs next to ``report.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if report.mae_vs_interval:
        p = out / "mae_vs_interval.csv"
        _write_csv(p, report.mae_vs_interval, ["noise_index", "interval_s", "estimator", "n", "mae_deg"])
        written.append(p)
        p = out / "variance_vs_interval.csv"
        _write_csv(p, report.mae_vs_interval, ["noise_index", "interval_s", "estimator", "n", "var_deg2"])
        written.append(p)
    if report.outlier_sweep:
        p = out / "outlier_sweep.csv"
        _write_csv(p, report.outlier_sweep,
                   ["mover_ratio", "weights", "estimator", "n", "mae_deg", "mean_error_deg", "var_deg2"])
        written.append(p)
    if report.scenes:
        p = out / "theta_per_scene.csv"
        _write_csv(p, report.scenes, ["mover_ratio", "seed", "weights", "estimator", "theta_deg", "error_deg"])
        written.append(p)
    if report.rte:
        p = out / "rte_vs_angle_bias.csv"
        _write_csv(p, report.rte, ["bias_deg", "angle_deg", "rte_m", "segments"])
        written.append(p)
    p = out / "report.json"
    write_report(report, p)
    written.append(p)
    return written
