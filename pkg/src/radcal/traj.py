"""Dead-reckoned trajectories and the relative trajectory error (RTE).

RTE splits the reference path into consecutive pieces of fixed arc length,
aligns the estimated pose at the start of each piece with the reference pose
(position and, by default, heading) and reports the mean endpoint distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from radcal.core import MountPose
from radcal.errors import DomainError, InsufficientDataError, ValidationError
from radcal.motion import MotionEstimate


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Poses ``(t, x, y, heading)``; heading is stored continuous (not wrapped)."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float).reshape(-1) for a in (self.t, self.x, self.y, self.heading)]
        if len({a.shape for a in arrs}) != 1:
            raise ValidationError("trajectory columns differ in length")
        if arrs[0].size > 1 and not np.all(np.diff(arrs[0]) > 0):
            raise ValidationError("trajectory timestamps must be strictly increasing")
        for name, a in zip(("t", "x", "y", "heading"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self):
        return self.t.size

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def arc_length(self) -> np.ndarray:
        steps = np.hypot(np.diff(self.x), np.diff(self.y))
        return np.concatenate([[0.0], np.cumsum(steps)])

    def pose_at(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        return np.interp(t, self.t, self.x), np.interp(t, self.t, self.y), np.interp(t, self.t, self.heading)

    def transformed(self, angle: float, dx: float = 0.0, dy: float = 0.0) -> Trajectory:
        """Apply a global rigid motion (rotate about the origin, then translate)."""
        c, s = np.cos(angle), np.sin(angle)
        return Trajectory(self.t, c * self.x - s * self.y + dx, s * self.x + c * self.y + dy, self.heading + angle)


def arc_displacement(v_body: np.ndarray, omega: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """Body-frame displacement over ``dt`` for constant body velocity and yaw rate.

    ``v_body`` is (n, 2); returns (n, 2). Exact for constant twist, reduces to
    ``v dt`` as ``omega -> 0``.
    """
    v_body = np.asarray(v_body, dtype=float).reshape(-1, 2)
    dpsi = np.asarray(omega, dtype=float) * dt
    small = np.abs(dpsi) < 1e-9
    safe = np.where(small, 1.0, dpsi)
    a = np.where(small, 1.0 - dpsi**2 / 6.0, np.sin(safe) / safe) * dt
    b = np.where(small, dpsi / 2.0, (1.0 - np.cos(safe)) / safe) * dt
    return np.column_stack([a * v_body[:, 0] - b * v_body[:, 1], b * v_body[:, 0] + a * v_body[:, 1]])


def integrate_body_velocity(t, v_body, omega, x0=0.0, y0=0.0, psi0=0.0) -> Trajectory:
    """Integrate per-step body velocities / yaw rates (one per interval) into world poses."""
    t = np.asarray(t, dtype=float)
    dt = np.diff(t)
    omega = np.asarray(omega, dtype=float)
    psi = psi0 + np.concatenate([[0.0], np.cumsum(omega * dt)])
    local = arc_displacement(v_body, omega, dt)
    c, s = np.cos(psi[:-1]), np.sin(psi[:-1])
    dx = c * local[:, 0] - s * local[:, 1]
    dy = s * local[:, 0] + c * local[:, 1]
    x = x0 + np.concatenate([[0.0], np.cumsum(dx)])
    y = y0 + np.concatenate([[0.0], np.cumsum(dy)])
    return Trajectory(t, x, y, psi)


def reconstruct_trajectory(motions: Sequence[MotionEstimate], mount: MountPose, yaw_rates,
                           start=(0.0, 0.0, 0.0)) -> Trajectory:
    """Vehicle trajectory from radar velocities, the mount pose and debiased yaw rates.

    Each radar velocity is rotated into the vehicle frame by ``mount.theta`` and
    the rotation-induced part ``(-omega y_s, omega x_s)`` is removed, giving the
    rear-axle velocity. Heading follows the yaw rates. Each interval uses the
    mean of its two endpoint velocities and yaw rates; sparse frames repeat the
    last usable velocity.
    """
    n = len(motions)
    yaw_rates = np.asarray(yaw_rates, dtype=float).reshape(-1)
    if yaw_rates.size != n:
        raise ValidationError("one yaw rate per motion estimate is required")
    usable = [not m.sparse for m in motions]
    if sum(usable) < 2:
        raise InsufficientDataError("need at least two non-sparse motion estimates")

    c, s = np.cos(mount.theta), np.sin(mount.theta)
    v_rear = np.empty((n, 2))
    last = None
    first_ok = usable.index(True)
    for k, m in enumerate(motions):
        if usable[k]:
            w = yaw_rates[k]
            vx = c * m.v.x - s * m.v.y + w * mount.y_s
            vy = s * m.v.x + c * m.v.y - w * mount.x_s
            last = (vx, vy)
        elif last is None:
            m0, w0 = motions[first_ok], yaw_rates[first_ok]
            last = (c * m0.v.x - s * m0.v.y + w0 * mount.y_s, s * m0.v.x + c * m0.v.y - w0 * mount.x_s)
        v_rear[k] = last

    t = np.array([m.t for m in motions], dtype=float)
    v_mid = 0.5 * (v_rear[:-1] + v_rear[1:])
    w_mid = 0.5 * (yaw_rates[:-1] + yaw_rates[1:])
    return integrate_body_velocity(t, v_mid, w_mid, *start)


def rte(estimated: Trajectory, reference: Trajectory, segment_length: float = 50.0,
        align_heading: bool = True) -> float:
    """Mean endpoint error over start-aligned reference segments of ``segment_length`` meters."""
    return float(np.mean(segment_errors(estimated, reference, segment_length, align_heading)))


def segment_errors(estimated: Trajectory, reference: Trajectory, segment_length: float = 50.0,
                   align_heading: bool = True) -> np.ndarray:
    if segment_length <= 0:
        raise DomainError("segment length must be positive")
    if len(estimated) < 2 or len(reference) < 2:
        raise DomainError("trajectories need at least two poses")
    t0 = max(estimated.t[0], reference.t[0])
    t1 = min(estimated.t[-1], reference.t[-1])
    tol = 1.5 * max(np.max(np.diff(estimated.t)), np.max(np.diff(reference.t)))
    if (t1 <= t0 or estimated.t[0] < t0 - tol or reference.t[0] < t0 - tol
            or estimated.t[-1] > t1 + tol or reference.t[-1] > t1 + tol):
        raise DomainError("estimated and reference trajectories cover different time spans")

    keep = (reference.t >= t0) & (reference.t <= t1)
    ref = Trajectory(reference.t[keep], reference.x[keep], reference.y[keep], reference.heading[keep])
    arc = ref.arc_length()
    # tolerance keeps the segment count stable when the path length is a multiple of it
    eps = 1e-9 * segment_length
    n_seg = int((arc[-1] + eps) // segment_length)
    if n_seg < 1:
        raise DomainError(f"reference path ({arc[-1]:.1f} m) shorter than one segment")
    marks = np.arange(1, n_seg + 1) * segment_length - eps
    bounds = np.concatenate([[0], np.minimum(np.searchsorted(arc, marks), arc.size - 1)])

    tb = ref.t[bounds]
    ex, ey, eh = estimated.pose_at(tb)
    errors = np.empty(n_seg)
    for k in range(n_seg):
        a, b = bounds[k], bounds[k + 1]
        rot = ref.heading[a] - eh[k] if align_heading else 0.0
        c, s = np.cos(rot), np.sin(rot)
        dx, dy = ex[k + 1] - ex[k], ey[k + 1] - ey[k]
        # aligned estimated displacement minus reference displacement
        errors[k] = np.hypot(c * dx - s * dy - (ref.x[b] - ref.x[a]), s * dx + c * dy - (ref.y[b] - ref.y[a]))
    return errors
