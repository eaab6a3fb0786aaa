import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import spearmanr

from conftest import estimate_config, moderate_scenario
from radcal.benchmark import rte_scenario_config
from radcal.config import BenchmarkConfig
from radcal.core import EgoState, MountPose, radar_velocity
from radcal.errors import DomainError, InsufficientDataError
from radcal.motion import INFINITE_COVARIANCE, MotionEstimate
from radcal.pipeline import process_frames, solve
from radcal.sim import generate_scenario
from radcal.traj import Trajectory, arc_displacement, reconstruct_trajectory, rte, segment_errors

MOUNT = MountPose(3.6, -0.6, math.radians(25.0))


def exact_motions(t, speed, omega, mount=MOUNT, sparse=()):
    out = []
    for k, (tk, v, w) in enumerate(zip(t, speed, omega)):
        rv = radar_velocity(EgoState(tk, v, w), mount)
        cov = INFINITE_COVARIANCE if k in sparse else np.zeros((2, 2))
        out.append(MotionEstimate(tk, rv, math.atan2(rv.y, rv.x), np.ones(3), 3, cov, k in sparse))
    return out


def straight(n=171, rate=17.0, speed=10.0):
    t = np.arange(n) / rate
    return t, np.full(n, speed), np.zeros(n)


def test_straight_100m():
    t, v, w = straight()
    traj = reconstruct_trajectory(exact_motions(t, v, w), MOUNT, w)
    assert t[-1] * 10 == pytest.approx(100.0)
    assert traj.x[-1] == pytest.approx(100.0, abs=0.01) and abs(traj.y[-1]) < 0.01


def test_angle_bias_gives_lateral_drift():
    t, v, w = straight()
    biased = MountPose(MOUNT.x_s, MOUNT.y_s, MOUNT.theta + math.radians(0.05))
    traj = reconstruct_trajectory(exact_motions(t, v, w), biased, w)
    assert abs(traj.y[-1]) == pytest.approx(100 * math.sin(math.radians(0.05)), rel=1e-3)
    assert abs(traj.y[-1]) == pytest.approx(0.087, abs=1e-3)


def test_circle_against_analytic_path():
    period = 2 * math.pi / 0.5
    n = int(period * 17) + 1
    t = np.arange(n) / 17.0
    v, w = np.full(n, 10.0), np.full(n, 0.5)
    traj = reconstruct_trajectory(exact_motions(t, v, w), MOUNT, w)
    ax, ay = 20 * np.sin(0.5 * t), 20 * (1 - np.cos(0.5 * t))
    assert np.max(np.hypot(traj.x - ax, traj.y - ay)) < 0.05


def test_sparse_frames_hold_previous_velocity():
    t, v, w = straight(n=20)
    traj = reconstruct_trajectory(exact_motions(t, v, w, sparse={0, 5, 6}), MOUNT, w)
    assert traj.x[-1] == pytest.approx(10.0 * t[-1], abs=1e-9)
    with pytest.raises(InsufficientDataError):
        reconstruct_trajectory(exact_motions(t[:3], v[:3], w[:3], sparse={0, 1}), MOUNT, w[:3])


def test_arc_displacement_limits():
    d = arc_displacement(np.array([[10.0, 0.0], [10.0, 0.0]]), np.array([0.0, 0.5]), 0.1)
    assert list(d[0]) == [1.0, 0.0]
    assert d[1, 0] == pytest.approx(20 * math.sin(0.05)) and d[1, 1] == pytest.approx(20 * (1 - math.cos(0.05)))


def curvy_reference(n=2001, dt=0.05):
    t = np.arange(n) * dt
    heading = 0.3 * np.sin(0.1 * t)
    x = np.cumsum(12 * np.cos(heading) * dt)
    y = np.cumsum(12 * np.sin(heading) * dt)
    return Trajectory(t, x, y, heading)


def test_rte_identity_is_zero():
    ref = curvy_reference()
    assert rte(ref, ref, 50.0) == 0.0


def test_rte_chord_oracle():
    delta = math.radians(0.05)
    t, v, w = straight(n=2000 * 17 // 10 + 1)
    motions = exact_motions(t, v, w)
    ref = reconstruct_trajectory(motions, MOUNT, w)
    biased = MountPose(MOUNT.x_s, MOUNT.y_s, MOUNT.theta + delta)
    est = reconstruct_trajectory(motions, biased, w)
    chord = 2 * 50 * math.sin(delta / 2)
    assert chord == pytest.approx(0.0436, abs=1e-4)
    assert rte(est, ref, 50.0) == pytest.approx(chord, rel=0.02)


@given(st.floats(-math.pi, math.pi), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_rte_rigid_transform_invariance(angle, dx, dy):
    ref = curvy_reference(n=401)
    rng = np.random.default_rng(1)
    est = Trajectory(ref.t, ref.x + np.cumsum(rng.normal(0, 0.02, 401)), ref.y + np.cumsum(rng.normal(0, 0.02, 401)),
                     ref.heading + 0.002)
    base = rte(est, ref, 20.0)
    moved = rte(est.transformed(angle, dx, dy), ref.transformed(angle, dx, dy), 20.0)
    assert moved == pytest.approx(base, rel=1e-6, abs=1e-9)


def test_rte_errors():
    ref = curvy_reference()
    later = Trajectory(ref.t + 30.0, ref.x, ref.y, ref.heading)
    with pytest.raises(DomainError):
        rte(later, ref, 50.0)
    with pytest.raises(DomainError):
        rte(ref, ref, 1e6)
    with pytest.raises(DomainError):
        rte(ref, ref, 0.0)


def test_rte_heading_alignment_switch():
    ref = curvy_reference()
    est = Trajectory(ref.t, ref.x, ref.y, ref.heading + 0.1)
    assert rte(est, ref, 50.0, align_heading=False) == 0.0
    assert segment_errors(est, ref, 50.0).max() > 1.0


def test_rte_monotone_in_angle_bias():
    from radcal.benchmark import rte_vs_angle_bias
    cfg = BenchmarkConfig.model_validate({"rte": {"route_length": 1000.0}})
    rows = rte_vs_angle_bias(cfg)
    values = [r["rte_m"] for r in rows]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_estimator_error_ranks_rte():
    bench = BenchmarkConfig.model_validate({"rte": {"route_length": 800.0}})
    angle_err, rtes = [], []
    for seed in range(20):
        calib = moderate_scenario(seed)
        cal_scene = generate_scenario(calib)
        est_cfg = estimate_config(calib)
        sols = solve(process_frames(cal_scene.frames, cal_scene.imu, est_cfg, odometry=cal_scene.odometry),
                     est_cfg).solutions

        route_cfg = rte_scenario_config(bench).model_copy(update={
            "seed": 1000 + seed, "noise": calib.noise, "mover_ratio": 0.2, "clutter_ratio": 0.1})
        route = generate_scenario(route_cfg)
        table = process_frames(route.frames, route.imu, est_cfg, odometry=route.odometry)
        keep = [k for k, e in enumerate(table.estimates) if e is not None and table.t[k] >= 5.0]
        motions = [table.estimates[k] for k in keep]
        ref = route.reference
        sel = (ref.t >= motions[0].t) & (ref.t <= motions[-1].t)
        ref = Trajectory(ref.t[sel], ref.x[sel], ref.y[sel], ref.heading[sel])
        start = tuple(float(a) for a in ref.pose_at(motions[0].t))
        for sol in sols.values():
            mount = MountPose(calib.mount.x_s, calib.mount.y_s, sol.theta)
            traj = reconstruct_trajectory(motions, mount, table.omega[keep], start=start)
            angle_err.append(abs(sol.theta_deg - calib.mount.theta_deg))
            rtes.append(rte(traj, ref, 50.0))
    rho = spearmanr(angle_err, rtes).statistic
    assert rho > 0
