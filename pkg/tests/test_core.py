import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from radcal.core import (
    EgoState,
    MountPose,
    Vec2,
    angle_diff,
    motion_direction,
    normalize_angle,
    radar_velocity,
    rotate,
    sensor_velocity,
)
from radcal.errors import DomainError

finite = st.floats(-1e3, 1e3, allow_nan=False)
angles = st.floats(-50.0, 50.0, allow_nan=False)


@pytest.mark.parametrize("raw, expected", [
    (0.0, 0.0),
    (3 * math.pi, math.pi),
    (-3 * math.pi / 2, math.pi / 2),
    (-math.pi, math.pi),
    (math.pi, math.pi),
])
def test_normalize_angle_examples(raw, expected):
    assert normalize_angle(raw) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_normalize_angle_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        normalize_angle(bad)


@given(angles)
def test_normalize_angle_range_and_congruence(x):
    y = normalize_angle(x)
    assert -math.pi < y <= math.pi
    k = (x - y) / (2 * math.pi)
    assert k == pytest.approx(round(k), abs=1e-9)


@given(angles)
def test_normalize_angle_idempotent(x):
    y = normalize_angle(x)
    assert normalize_angle(y) == y


def test_motion_direction_examples():
    assert motion_direction(Vec2(1.0, 0.0)) == 0.0
    assert motion_direction(Vec2(0.0, -2.0)) == pytest.approx(-math.pi / 2)
    # independent evaluation of the direction of (10.3, 1.8)
    oracle = math.acos(10.3 / math.sqrt(10.3**2 + 1.8**2))
    assert motion_direction(Vec2(10.3, 1.8)) == pytest.approx(oracle, abs=1e-12)
    assert motion_direction(Vec2(10.3, 1.8)) == pytest.approx(0.17301, abs=5e-6)
    assert math.degrees(motion_direction(Vec2(10.3, 1.8))) == pytest.approx(9.912, abs=1e-3)


@pytest.mark.parametrize("v", [Vec2(0.0, 0.0), Vec2(math.nan, 1.0)])
def test_motion_direction_rejects_degenerate(v):
    with pytest.raises(DomainError):
        motion_direction(v)


@given(st.floats(0.1, 100), st.floats(-math.pi, math.pi), st.floats(-10, 10))
def test_motion_direction_rotation_equivariance(r, a, phi):
    v = Vec2(r * math.cos(a), r * math.sin(a))
    lhs = motion_direction(rotate(v, phi))
    rhs = normalize_angle(motion_direction(v) + phi)
    assert abs(angle_diff(lhs, rhs)) < 1e-9


def test_sensor_velocity_examples():
    assert sensor_velocity(EgoState(0, 10.0, 0.0), MountPose(3.6, -0.6, 1.0)) == (10.0, 0.0)
    v = sensor_velocity(EgoState(0, 10.0, 0.5), MountPose(3.6, -0.6))
    assert v.x == pytest.approx(10.3) and v.y == pytest.approx(1.8)
    # |v| sin(direction) reproduces the rotational lateral term
    assert v.norm() * math.sin(motion_direction(v)) == pytest.approx(0.5 * 3.6, abs=1e-12)
    assert v.norm() == pytest.approx(10.456, abs=1e-3)
    assert sensor_velocity(EgoState(0, 0.0, 1.0), MountPose(1.0, 0.0)) == (0.0, 1.0)


@given(finite, finite, finite, finite, angles)
def test_lateral_component_identity(speed, omega, x_s, y_s, theta):
    v = sensor_velocity(EgoState(0.0, speed, omega), MountPose(x_s, y_s, theta))
    assert v.y == omega * x_s


@given(st.floats(0, 40), st.floats(-1, 1), st.floats(-math.pi, math.pi))
def test_radar_velocity_is_rotated_sensor_velocity(speed, omega, theta):
    mount = MountPose(3.6, -0.6, theta)
    ego = EgoState(0.0, speed, omega)
    back = rotate(radar_velocity(ego, mount), mount.theta)
    v = sensor_velocity(ego, mount)
    assert back.x == pytest.approx(v.x, abs=1e-9) and back.y == pytest.approx(v.y, abs=1e-9)


def test_mount_pose_normalizes_and_validates():
    assert MountPose(1.0, 0.0, 3 * math.pi).theta == math.pi
    with pytest.raises(DomainError):
        MountPose(math.inf, 0.0)


def test_types_are_immutable():
    m = MountPose(1.0, 0.0)
    with pytest.raises(AttributeError):
        m.theta = 1.0
    assert Vec2(3.0, 4.0).norm() == 5.0
