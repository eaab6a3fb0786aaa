"""Synthetic scenario generator with known ground truth.

Ego motion follows piecewise-linear speed / yaw-rate profiles (rear-axle
center, no side-slip). Each radar frame redraws its targets: static points
whose Doppler obeys :func:`radcal.motion.predicted_doppler` exactly before
noise, movers seen through their relative velocity, and uniform clutter. The
IMU stream applies the scale/bias/noise measurement model to the true yaw rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from radcal.config import NoiseConfig, ScenarioConfig, Segment
from radcal.core import EgoState, MountPose, Vec2, radar_velocity, rotate
from radcal.imu import ImuSample, simulate_readings
from radcal.motion import RadarFrame, predicted_doppler
from radcal.traj import Trajectory, integrate_body_velocity

STATIC, MOVER, CLUTTER = 0, 1, 2
LABEL_NAMES = {STATIC: "static", MOVER: "mover", CLUTTER: "clutter"}


@dataclass(frozen=True)
class DriveProfile:
    """Rest for ``stationary_duration`` seconds, then the segments; last values are held."""

    segments: Sequence[Segment]
    stationary_duration: float = 0.0

    def __post_init__(self):
        starts = self.stationary_duration + np.concatenate(
            [[0.0], np.cumsum([s.duration for s in self.segments])])
        object.__setattr__(self, "_starts", starts)

    def profile(self, t):
        """Speed, yaw rate and longitudinal acceleration at times ``t``."""
        t = np.asarray(t, dtype=float)
        speed = np.zeros_like(t)
        yaw = np.zeros_like(t)
        accel = np.zeros_like(t)
        if not self.segments:
            return speed, yaw, accel
        starts = self._starts
        idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(self.segments) - 1)
        v0 = np.array([s.speed_start for s in self.segments])[idx]
        v1 = np.array([s.speed_end for s in self.segments])[idx]
        w0 = np.array([s.yaw_rate_start for s in self.segments])[idx]
        w1 = np.array([s.yaw_rate_end for s in self.segments])[idx]
        dur = np.array([s.duration for s in self.segments])[idx]
        frac = np.clip((t - starts[idx]) / dur, 0.0, 1.0)
        moving = t >= starts[0]
        speed = np.where(moving, v0 + (v1 - v0) * frac, 0.0)
        yaw = np.where(moving, w0 + (w1 - w0) * frac, 0.0)
        inside = moving & (t < starts[-1])
        accel = np.where(inside, (v1 - v0) / dur, 0.0)
        return speed, yaw, accel


def integrate_trajectory(drive: DriveProfile, duration: float, dt: float) -> list[EgoState]:
    """Ego states on the grid ``0, dt, 2dt, ... <= duration``.

    Speed and yaw rate at each grid point come straight from the profile. Poses
    are propagated with the profile sampled mid-interval and an exact
    constant-twist step.
    """
    traj, speed, yaw = _integrate(drive, duration, dt)
    return [
        EgoState(float(t), float(v), float(w), float(h), Vec2(float(x), float(y)))
        for t, v, w, h, x, y in zip(traj.t, speed, yaw, _wrap(traj.heading), traj.x, traj.y)
    ]


def _wrap(a):
    return np.mod(np.asarray(a) + np.pi, 2 * np.pi) - np.pi


def _grid(duration: float, dt: float) -> np.ndarray:
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = int(math.floor(duration / dt + 1e-9))
    return np.arange(n + 1) * dt


def _integrate(drive: DriveProfile, duration: float, dt: float):
    t = _grid(duration, dt)
    speed, yaw, _ = drive.profile(t)
    v_mid, w_mid, _ = drive.profile(0.5 * (t[:-1] + t[1:]))
    traj = integrate_body_velocity(t, np.column_stack([v_mid, np.zeros_like(v_mid)]), w_mid)
    return traj, speed, yaw


@dataclass(frozen=True)
class Population:
    detections: int = 60
    mover_ratio: float = 0.0
    clutter_ratio: float = 0.0
    mover_objects: int = 3
    mover_speed_range: tuple[float, float] = (2.0, 15.0)
    clutter_doppler_max: float = 30.0
    fov_half_angle: float = math.radians(75.0)
    range_limits: tuple[float, float] = (1.0, 100.0)

    def counts(self) -> tuple[int, int, int]:
        movers = int(round(self.detections * self.mover_ratio))
        clutter = int(round(self.detections * self.clutter_ratio))
        clutter = min(clutter, self.detections - movers)
        return self.detections - movers - clutter, movers, clutter


def render_frame(ego: EgoState, mount: MountPose, population: Population, noise: NoiseConfig,
                 rng: np.random.Generator, accel: float = 0.0, accel_doppler_coeff: float = 0.0,
                 mover_velocities: Sequence[Vec2] | None = None) -> tuple[RadarFrame, np.ndarray]:
    """Draw one radar scan for the given ego state.

    ``mover_velocities`` (vehicle frame, m/s) fixes the mover objects' velocities;
    by default each object gets a random heading and a speed from
    ``population.mover_speed_range``. Returns the frame and per-detection labels.
    """
    n_static, n_mover, n_clutter = population.counts()
    fov = population.fov_half_angle
    v_radar = radar_velocity(ego, mount)
    sigma_d = math.hypot(noise.sigma_doppler, accel_doppler_coeff * abs(accel))

    az_s = rng.uniform(-fov, fov, n_static)
    dop_s = predicted_doppler(v_radar, az_s)

    az_m = rng.uniform(-fov, fov, n_mover)
    if mover_velocities is None:
        lo, hi = population.mover_speed_range
        sp = rng.uniform(lo, hi, population.mover_objects)
        hd = rng.uniform(-np.pi, np.pi, population.mover_objects)
        mover_velocities = [Vec2(float(a * math.cos(h)), float(a * math.sin(h))) for a, h in zip(sp, hd)]
    rel = []
    for v_obj in mover_velocities:
        v_obj_radar = rotate(v_obj, -mount.theta)
        rel.append((v_radar.x - v_obj_radar.x, v_radar.y - v_obj_radar.y))
    rel = np.array(rel, dtype=float).reshape(-1, 2)
    owner = np.arange(n_mover) % max(len(rel), 1)
    if n_mover:
        dop_m = -(rel[owner, 0] * np.cos(az_m) + rel[owner, 1] * np.sin(az_m))
    else:
        dop_m = np.zeros(0)

    az_c = rng.uniform(-fov, fov, n_clutter)
    dop_c = rng.uniform(-population.clutter_doppler_max, population.clutter_doppler_max, n_clutter)

    az = np.concatenate([az_s, az_m, az_c])
    dop = np.concatenate([dop_s, dop_m, dop_c])
    labels = np.concatenate([np.full(n_static, STATIC), np.full(n_mover, MOVER), np.full(n_clutter, CLUTTER)])
    n = az.size
    targets = slice(0, n_static + n_mover)
    if sigma_d > 0:
        dop[targets] += rng.normal(0.0, sigma_d, n_static + n_mover)
    if noise.sigma_azimuth > 0:
        az = az + rng.normal(0.0, noise.sigma_azimuth, n)
    rng_m = rng.uniform(*population.range_limits, n)
    amp = rng.uniform(-10.0, 20.0, n)
    order = rng.permutation(n)
    frame = RadarFrame(ego.t, az[order], dop[order], rng_m[order], amp[order])
    return frame, labels[order].astype(np.int8)


@dataclass(frozen=True, eq=False)
class Scenario:
    config: ScenarioConfig
    mount: MountPose
    ego: list[EgoState]  # at IMU rate
    reference: Trajectory  # rear-axle trajectory at IMU rate
    frames: list[RadarFrame]
    frame_states: list[EgoState]
    labels: list[np.ndarray]
    imu: list[ImuSample]
    true_yaw_rates: np.ndarray

    @property
    def odometry(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([e.t for e in self.ego]), np.array([e.speed for e in self.ego])

    def stationary_samples(self) -> list[ImuSample]:
        t0 = self.config.stationary_duration
        return [s for s in self.imu if s.t < t0]


def drive_profile(cfg: ScenarioConfig) -> DriveProfile:
    return DriveProfile(tuple(cfg.segments), cfg.stationary_duration)


def population(cfg: ScenarioConfig) -> Population:
    return Population(cfg.detections_per_frame, cfg.mover_ratio, cfg.clutter_ratio, cfg.mover_objects,
                      tuple(cfg.mover_speed_range), cfg.clutter_doppler_max, cfg.fov_half_angle,
                      tuple(cfg.range_limits))


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    """Deterministic scenario for ``cfg`` (same seed, same bytes)."""
    mount = cfg.mount.pose()
    drive = drive_profile(cfg)
    rng = np.random.default_rng(cfg.seed)

    ref, speed, yaw = _integrate(drive, cfg.duration, 1.0 / cfg.imu_rate)
    ego = [
        EgoState(float(t), float(v), float(w), float(h), Vec2(float(x), float(y)))
        for t, v, w, h, x, y in zip(ref.t, speed, yaw, _wrap(ref.heading), ref.x, ref.y)
    ]
    readings = simulate_readings(yaw, cfg.imu_model.model(), rng)
    imu = [ImuSample(float(t), float(w)) for t, w in zip(ref.t, readings)]

    n_frames = int(math.ceil(cfg.duration * cfg.frame_rate - 1e-9))
    t_frames = np.arange(n_frames) / cfg.frame_rate
    f_speed, f_yaw, f_acc = drive.profile(t_frames)
    fx, fy, fh = ref.pose_at(t_frames)
    pop = population(cfg)
    frames, labels, states = [], [], []
    for k, t in enumerate(t_frames):
        st = EgoState(float(t), float(f_speed[k]), float(f_yaw[k]), float(_wrap(fh[k])), Vec2(float(fx[k]), float(fy[k])))
        frame, lab = render_frame(st, mount, pop, cfg.noise, rng, float(f_acc[k]), cfg.accel_doppler_coeff)
        frames.append(frame)
        labels.append(lab)
        states.append(st)
    return Scenario(cfg, mount, ego, ref, frames, states, labels, imu, yaw)
