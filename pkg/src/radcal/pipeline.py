"""End-to-end calibration: bias -> per-frame motion -> gating -> observations -> estimators.

Per-frame work (:func:`process_frames`) is separated from the solvers
(:func:`solve`) so a benchmark can re-solve arbitrary time windows without
recomputing motion estimates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from radcal import mount as mnt
from radcal.config import EstimateConfig
from radcal.core import MountPose
from radcal.errors import InsufficientDataError, RadcalError, UnobservableScaleError
from radcal.imu import ImuSample, bias_from_stream, debias, interpolate_rate, stationary_mask
from radcal.motion import MotionEstimate, RadarFrame, estimate_motion, gate_frame, ransac_weights

log = logging.getLogger(__name__)


@dataclass
class FrameTable:
    """Per-frame intermediate results, index-aligned with the input frames."""

    t: np.ndarray
    estimates: list[MotionEstimate | None]
    omega: np.ndarray  # debiased yaw rate at frame time
    speed: np.ndarray  # rear-axle speed used for gating / Kabsch
    gated: np.ndarray  # True = accepted
    observations: list[mnt.LateralObservation | None]
    bias: float
    notes: list[str] = field(default_factory=list)

    def usable(self, t0: float = -math.inf, t1: float = math.inf) -> list[int]:
        return [k for k, o in enumerate(self.observations)
                if o is not None and t0 <= self.t[k] < t1]

    def summary(self) -> dict:
        n_fail = sum(e is None for e in self.estimates)
        obs = [o for o in self.observations if o is not None]
        return {
            "total": len(self.estimates),
            "motion_failed": n_fail,
            "gated_out": int(np.count_nonzero(~self.gated)),
            "observations": len(obs),
            "sparse": sum(o.eta == 0.0 for o in obs),
            "weighted": sum(o.eta > 0.0 for o in obs),
            "chi_clamped": sum(o.clamped for o in obs),
        }


def _frame_weights(frames, cfg: EstimateConfig, external):
    if cfg.weights == "external":
        if external is None:
            raise InsufficientDataError("external weights selected but none supplied")
        return list(external)
    if cfg.weights == "unit":
        return [np.ones(len(f)) for f in frames]
    rc = cfg.ransac.ransac()
    return [ransac_weights(f, rc, stream=k) if len(f) >= 2 else np.zeros(len(f)) for k, f in enumerate(frames)]


def _estimate_bias(imu: Sequence[ImuSample], cfg: EstimateConfig, speed_t, speed_v, notes) -> float:
    st = cfg.stationary
    if st.bias_override is not None:
        notes.append("bias taken from configuration")
        return st.bias_override
    runs = stationary_mask(speed_t, speed_v, st.speed_threshold, st.min_duration)
    if not runs.any():
        notes.append("no stationary window found; bias assumed 0")
        return 0.0
    # map stationary runs of the speed series onto the IMU timeline
    edges = np.flatnonzero(np.diff(np.concatenate([[0], runs.astype(int), [0]])))
    intervals = [(speed_t[a], speed_t[b - 1]) for a, b in zip(edges[::2], edges[1::2])]
    mask = [any(a <= s.t <= b for a, b in intervals) for s in imu]
    if not any(mask):
        notes.append("stationary window holds no IMU samples; bias assumed 0")
        return 0.0
    return bias_from_stream(imu, mask)


def process_frames(frames: Sequence[RadarFrame], imu: Sequence[ImuSample], cfg: EstimateConfig,
                   odometry: tuple[np.ndarray, np.ndarray] | None = None,
                   weights: Sequence[np.ndarray] | None = None) -> FrameTable:
    if not imu:
        raise InsufficientDataError("IMU stream is empty")
    notes: list[str] = []
    t = np.array([f.t for f in frames], dtype=float)
    frame_w = _frame_weights(frames, cfg, weights)

    estimates: list[MotionEstimate | None] = []
    for f, w in zip(frames, frame_w):
        try:
            estimates.append(estimate_motion(f, w, cfg.inlier_threshold, cfg.inlier_ratio_threshold))
        except RadcalError as err:
            log.debug("t=%.3f: motion estimate failed: %s", f.t, err)
            estimates.append(None)

    if odometry is not None:
        speed_t, speed_v = np.asarray(odometry[0], float), np.asarray(odometry[1], float)
    else:
        notes.append("no odometry stream; speeds derived from radar motion")
        speed_t = t
        speed_v = np.array([e.speed if e is not None else math.nan for e in estimates])
    bias = _estimate_bias(imu, cfg, speed_t, speed_v, notes)
    omega = debias(interpolate_rate(imu, t), bias)

    x_s, y_s = cfg.mount.x_s, cfg.mount.y_s
    if odometry is not None:
        speed = np.interp(t, speed_t, speed_v)
    else:
        # rear-axle speed from |V| and the rotation-induced lateral component
        speed = np.array([
            math.sqrt(max(e.speed**2 - (w * x_s) ** 2, 0.0)) + w * y_s if e is not None else 0.0
            for e, w in zip(estimates, omega)
        ])

    gate_max = math.radians(cfg.gating.max_yaw_rate_deg)
    gated = np.array([gate_frame(v, w, cfg.gating.min_speed, gate_max) for v, w in zip(speed, omega)], dtype=bool)
    observations: list[mnt.LateralObservation | None] = []
    for e, w, ok in zip(estimates, omega, gated):
        if e is None or not ok or not e.speed > 0:
            observations.append(None)
            continue
        observations.append(mnt.lateral_observation(e, float(w), x_s, cfg.variance_floor))
    return FrameTable(t, estimates, omega, speed, gated, observations, bias, notes)


@dataclass
class EstimationResult:
    solutions: dict[str, mnt.CalibrationSolution]
    errors: dict[str, str]
    table: FrameTable

    def solution_dicts(self) -> dict[str, dict]:
        out = {}
        for name, s in self.solutions.items():
            out[name] = {
                "theta_rad": s.theta,
                "theta_deg": s.theta_deg,
                "s_prime": s.s_prime,
                "scale": s.scale,
                "frames_used": s.frames_used,
                "residual_norm": s.residual_norm,
                "converged": s.converged,
                "fallback": s.fallback,
            }
        return out


def solve(table: FrameTable, cfg: EstimateConfig, indices: Sequence[int] | None = None,
          estimators: Sequence[str] | None = None) -> EstimationResult:
    """Run the selected estimators on the observations at ``indices`` (default: all usable)."""
    idx = table.usable() if indices is None else list(indices)
    obs = [table.observations[k] for k in idx]
    estimators = tuple(estimators or cfg.estimators())
    mount = MountPose(cfg.mount.x_s, cfg.mount.y_s)
    if not any(o.eta > 0 for o in obs):
        raise InsufficientDataError("no frame survived gating and sparse-frame rejection")

    solutions: dict[str, mnt.CalibrationSolution] = {}
    errors: dict[str, str] = {}
    wlsq = None

    def wlsq_solution():
        nonlocal wlsq
        if wlsq is None:
            try:
                wlsq = mnt.solve_wlsq_angle(obs)
            except UnobservableScaleError:
                wlsq = mnt.weighted_mean_solution(obs, fallback="unobservable-scale")
                wlsq = mnt.CalibrationSolution(**{**wlsq.__dict__, "estimator": "wlsq"})
        return wlsq

    for name in estimators:
        try:
            if name == "wlsq":
                solutions[name] = wlsq_solution()
            elif name == "mean":
                solutions[name] = mnt.weighted_mean_solution(obs)
            elif name == "kabsch":
                s_prime = wlsq_solution().s_prime if cfg.kabsch_scale == "wlsq" else 1.0
                ests = [table.estimates[k] for k in idx]
                etas = [o.eta for o in obs]
                solutions[name] = mnt.kabsch_solution(ests, etas, table.speed[idx], table.omega[idx], mount, s_prime)
            elif name == "odr":
                sb, sc = cfg.odr.sigma_beta, cfg.odr.sigma_chi
                if sb is None or sc is None:
                    db, dc = mnt.default_odr_sigmas(obs, cfg.mount.x_s, cfg.odr.sigma_omega)
                    sb, sc = sb or db, sc or dc
                solutions[name] = mnt.solve_odr_angle(obs, sb, sc, max_iter=cfg.odr.max_iter)
            else:
                raise ValueError(f"unknown estimator {name!r}")
        except RadcalError as err:
            errors[name] = f"{type(err).__name__}: {err}"
    if not solutions:
        raise InsufficientDataError("every estimator failed: " + "; ".join(errors.values()))
    return EstimationResult(solutions, errors, table)


def run_estimation(frames: Sequence[RadarFrame], imu: Sequence[ImuSample], cfg: EstimateConfig,
                   odometry=None, weights=None) -> EstimationResult:
    table = process_frames(frames, imu, cfg, odometry, weights)
    return solve(table, cfg)
