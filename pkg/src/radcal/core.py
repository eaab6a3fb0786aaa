"""Geometric and kinematic primitives shared by every module.

Frames and conventions
----------------------
Vehicle frame: origin at the rear-axle center, x forward along the thrust
axis, y to the left, counterclockwise angles positive. The radar frame is the
vehicle frame rotated by ``+theta`` (the yaw mounting angle) and translated to
``(x_s, y_s)``. A vector expressed in the vehicle frame is therefore mapped into
the radar frame by ``rotate(v, -theta)``.

Angles are plain floats in radians. Every function that returns an angle
returns it normalized to ``(-pi, pi]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from radcal.errors import DomainError

TWO_PI = 2.0 * math.pi


class Vec2(NamedTuple):
    """Immutable 2D vector (m or m/s)."""

    x: float
    y: float

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class MountPose:
    """Radar pose relative to the rear-axle center.

    Attributes
    ----------
    x_s, y_s:
        Longitudinal / lateral offset in meters.
    theta:
        Yaw mounting angle in radians.
    """

    x_s: float
    y_s: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x_s) and math.isfinite(self.y_s)):
            raise DomainError("mount offsets must be finite")
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True)
class EgoState:
    """Vehicle state at the rear-axle center; no side-slip by construction."""

    t: float
    speed: float
    yaw_rate: float
    heading: float = 0.0
    position: Vec2 = field(default_factory=lambda: Vec2(0.0, 0.0))


def normalize_angle(raw: float) -> float:
    """Wrap ``raw`` radians into ``(-pi, pi]``.

    >>> normalize_angle(3 * math.pi) == math.pi
    True
    """
    raw = float(raw)
    if not math.isfinite(raw):
        raise DomainError(f"cannot normalize non-finite angle {raw!r}")
    wrapped = raw - TWO_PI * math.ceil((raw - math.pi) / TWO_PI)
    # guard the two ends against rounding in the product above
    if wrapped > math.pi:
        wrapped -= TWO_PI
    elif wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def angle_diff(a: float, b: float) -> float:
    """Signed smallest difference ``a - b`` in ``(-pi, pi]``."""
    return normalize_angle(a - b)


def rotate(v: Vec2, angle: float) -> Vec2:
    """Rotate ``v`` counterclockwise by ``angle`` radians."""
    c, s = math.cos(angle), math.sin(angle)
    return Vec2(c * v.x - s * v.y, s * v.x + c * v.y)


def motion_direction(v: Vec2) -> float:
    """Direction of ``v`` (the angle beta of the radar motion)."""
    if not (math.isfinite(v.x) and math.isfinite(v.y)):
        raise DomainError("velocity must be finite")
    if v.x == 0.0 and v.y == 0.0:
        raise DomainError("direction of a zero vector is undefined")
    return normalize_angle(math.atan2(v.y, v.x))


def sensor_velocity(ego: EgoState, mount: MountPose) -> Vec2:
    """Rigid-body velocity of the radar mounting point in the vehicle frame.

    The rear axle moves along x only, so the sensor picks up the rotational
    term ``omega x r_s``: ``(speed - omega*y_s, omega*x_s)``.
    """
    return Vec2(ego.speed - ego.yaw_rate * mount.y_s, ego.yaw_rate * mount.x_s)


def radar_velocity(ego: EgoState, mount: MountPose) -> Vec2:
    """Sensor velocity expressed in the radar frame."""
    return rotate(sensor_velocity(ego, mount), -mount.theta)
