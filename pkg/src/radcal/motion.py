"""Instantaneous radar ego-motion from a single scan.

Doppler sign convention: a static scatterer at azimuth ``alpha`` seen from a
radar moving with velocity ``v`` (radar frame) reports

    d = -(v_x cos(alpha) + v_y sin(alpha))

so the model row ``cos(alpha) v_x + sin(alpha) v_y = -d`` holds exactly for
static points. The simulator uses :func:`predicted_doppler` as well, so the two
sides can never drift apart.

Chain for one frame: point weights (RANSAC or external) -> weighted LSQ
velocity -> inlier count -> residuals over inliers -> covariance, or the
infinite sentinel when the inlier ratio is too low.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from radcal.core import Vec2, normalize_angle
from radcal.errors import (
    DomainError,
    InsufficientDataError,
    SingularGeometryError,
    ValidationError,
)

DEFAULT_INLIER_THRESHOLD = 0.5
DEFAULT_INLIER_RATIO_THRESHOLD = 0.3
MIN_SPEED = 1.0  # m/s
MAX_YAW_RATE = math.radians(140.0)  # rad/s

_RANK_TOL = 1e-10

INFINITE_COVARIANCE = np.diag([np.inf, np.inf])
INFINITE_COVARIANCE.setflags(write=False)


def is_infinite(cov: np.ndarray) -> bool:
    return not np.all(np.isfinite(np.diag(cov)))


@dataclass(frozen=True)
class Detection:
    azimuth: float
    doppler: float
    range: float = 0.0
    amplitude: float = 0.0


@dataclass(frozen=True, eq=False)
class RadarFrame:
    """One radar scan stored column-wise.

    ``azimuth`` (rad, radar frame), ``doppler`` (m/s), ``range`` (m) and
    ``amplitude`` are 1-D arrays of equal length J.
    """

    t: float
    azimuth: np.ndarray
    doppler: np.ndarray
    range: np.ndarray = None
    amplitude: np.ndarray = None

    def __post_init__(self):
        az = np.asarray(self.azimuth, dtype=float).reshape(-1)
        dop = np.asarray(self.doppler, dtype=float).reshape(-1)
        if az.shape != dop.shape:
            raise ValidationError("azimuth and doppler lengths differ")
        rng = np.zeros_like(az) if self.range is None else np.asarray(self.range, dtype=float)
        amp = np.zeros_like(az) if self.amplitude is None else np.asarray(self.amplitude, dtype=float)
        if rng.shape != az.shape or amp.shape != az.shape:
            raise ValidationError("range/amplitude lengths differ from azimuth")
        for name, arr in (("azimuth", az), ("doppler", dop), ("range", rng), ("amplitude", amp)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_detections(cls, t: float, detections: Sequence[Detection]) -> RadarFrame:
        return cls(
            t,
            [d.azimuth for d in detections],
            [d.doppler for d in detections],
            [d.range for d in detections],
            [d.amplitude for d in detections],
        )

    def __len__(self) -> int:
        return self.azimuth.shape[0]

    @property
    def detections(self) -> list[Detection]:
        return [
            Detection(float(a), float(d), float(r), float(p))
            for a, d, r, p in zip(self.azimuth, self.doppler, self.range, self.amplitude)
        ]

    def design(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows ``(cos a, sin a)`` and right-hand side ``-d``."""
        A = np.column_stack([np.cos(self.azimuth), np.sin(self.azimuth)])
        return A, -self.doppler

    def subset(self, mask: np.ndarray) -> RadarFrame:
        mask = np.asarray(mask)
        return RadarFrame(self.t, self.azimuth[mask], self.doppler[mask], self.range[mask], self.amplitude[mask])


@dataclass(frozen=True)
class RansacConfig:
    doppler_threshold: float = 0.2  # m/s
    iterations: int = 100
    min_inliers: int = 5
    seed: int = 0


@dataclass(frozen=True, eq=False)
class MotionEstimate:
    """Per-frame motion result.

    ``covariance`` is either a finite 2x2 PSD matrix or
    :data:`INFINITE_COVARIANCE`; ``sparse`` is true exactly in the latter case.
    ``beta`` is NaN when the estimated velocity is exactly zero.
    """

    t: float
    v: Vec2
    beta: float
    weights: np.ndarray
    inlier_count: int
    covariance: np.ndarray
    sparse: bool

    @property
    def speed(self) -> float:
        return self.v.norm()


def check_weights(weights, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != n:
        raise ValidationError(f"weight vector has {w.shape[0]} entries, frame has {n}")
    if not np.all((w >= 0.0) & (w <= 1.0)):
        raise ValidationError("weights must lie in [0, 1]")
    return w


def predicted_doppler(v: Vec2, azimuth):
    """Doppler a static scatterer at ``azimuth`` produces for radar velocity ``v``."""
    return -(v[0] * np.cos(azimuth) + v[1] * np.sin(azimuth))


def _lstsq(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    sol, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    if rank < 2 or sv[-1] <= _RANK_TOL * sv[0]:
        raise SingularGeometryError("azimuth geometry does not determine a 2D velocity")
    return sol


def solve_wlsq_motion(frame: RadarFrame, weights) -> Vec2:
    """Weighted least-squares radar velocity over the Doppler profile.

    Minimizes ``sum_j w_j (cos a_j vx + sin a_j vy + d_j)^2``.
    """
    w = check_weights(weights, len(frame))
    pos = w > 0.0
    if np.count_nonzero(pos) < 2:
        raise InsufficientDataError("need at least two positively weighted detections")
    A, b = frame.design()
    sw = np.sqrt(w[pos])
    sol = _lstsq(A[pos] * sw[:, None], b[pos] * sw)
    return Vec2(float(sol[0]), float(sol[1]))


def ransac_fit(frame: RadarFrame, cfg: RansacConfig = RansacConfig(), stream: int | None = None):
    """RANSAC over 2-point velocity hypotheses.

    Returns ``(v, weights)`` where ``weights`` is binary. ``v`` is the velocity
    the inlier set was tested against (``None`` when no hypothesis reached the
    minimum support) so every returned inlier satisfies
    ``|residual(v)| <= cfg.doppler_threshold``.

    ``stream`` mixes an index (usually the frame number) into the seed so that
    frames processed in any order draw independent, reproducible samples.
    """
    J = len(frame)
    if J < 2:
        raise InsufficientDataError("RANSAC needs at least two detections")
    seed = cfg.seed if stream is None else [cfg.seed, stream]
    rng = np.random.default_rng(seed)
    A, b = frame.design()
    c, s = A[:, 0], A[:, 1]

    i = rng.integers(0, J, size=cfg.iterations)
    j = (i + rng.integers(1, J, size=cfg.iterations)) % J
    det = c[i] * s[j] - s[i] * c[j]
    ok = np.abs(det) > 1e-9
    i, j, det = i[ok], j[ok], det[ok]
    vx = (b[i] * s[j] - s[i] * b[j]) / det
    vy = (c[i] * b[j] - b[i] * c[j]) / det

    need = min(cfg.min_inliers, J)
    zeros = np.zeros(J)
    if vx.size == 0:
        return None, zeros
    res = np.abs(A @ np.vstack([vx, vy]) - b[:, None])
    support = np.count_nonzero(res <= cfg.doppler_threshold, axis=0)
    best = int(np.argmax(support))
    if support[best] < need:
        return None, zeros

    v = Vec2(float(vx[best]), float(vy[best]))
    mask = res[:, best] <= cfg.doppler_threshold
    try:
        sol = _lstsq(A[mask], b[mask])
    except SingularGeometryError:
        return v, mask.astype(float)
    refined_mask = np.abs(A @ sol - b) <= cfg.doppler_threshold
    if np.count_nonzero(refined_mask) >= np.count_nonzero(mask):
        v, mask = Vec2(float(sol[0]), float(sol[1])), refined_mask
    return v, mask.astype(float)


def ransac_weights(frame: RadarFrame, cfg: RansacConfig = RansacConfig(), stream: int | None = None) -> np.ndarray:
    """Binary inlier weights of the best RANSAC hypothesis (all zero on failure)."""
    return ransac_fit(frame, cfg, stream)[1]


def count_inliers(weights, inlier_threshold: float = DEFAULT_INLIER_THRESHOLD) -> int:
    """Number of points whose weight reaches the inlier threshold (inclusive)."""
    if not 0.0 < inlier_threshold <= 1.0:
        raise DomainError("inlier threshold must lie in (0, 1]")
    w = np.asarray(weights, dtype=float)
    return int(np.count_nonzero(w >= inlier_threshold))


def residuals(frame: RadarFrame, v: Vec2, inlier_mask) -> np.ndarray:
    """``A v - D`` over the inliers, with ``D = -d``."""
    mask = np.asarray(inlier_mask, dtype=bool)
    if mask.shape != (len(frame),):
        raise ValidationError("inlier mask length differs from frame")
    if not mask.any():
        raise InsufficientDataError("residuals need at least one inlier")
    A, b = frame.design()
    return A[mask] @ np.array([v[0], v[1]]) - b[mask]


def motion_covariance(eps, A, inlier_count: int, n_points: int,
                      inlier_ratio_threshold: float = DEFAULT_INLIER_RATIO_THRESHOLD) -> np.ndarray:
    """Covariance of the velocity estimate, or the infinite sentinel for sparse frames.

    Frames with ``L <= 2`` are treated as sparse too: the ``L - 2`` degrees of
    freedom leave no residual information.
    """
    L, J = int(inlier_count), int(n_points)
    if J == 0 or L / J < inlier_ratio_threshold or L <= 2:
        return INFINITE_COVARIANCE
    eps = np.asarray(eps, dtype=float)
    A = np.asarray(A, dtype=float)
    normal = A.T @ A
    sv = np.linalg.svd(normal, compute_uv=False)
    if sv[-1] <= _RANK_TOL * sv[0]:
        raise SingularGeometryError("A^T A is singular")
    sigma2 = float(eps @ eps) / (L - 2)
    cov = sigma2 * np.linalg.inv(normal)
    return 0.5 * (cov + cov.T)


def estimate_motion(frame: RadarFrame, weights,
                    inlier_threshold: float = DEFAULT_INLIER_THRESHOLD,
                    inlier_ratio_threshold: float = DEFAULT_INLIER_RATIO_THRESHOLD) -> MotionEstimate:
    """Full single-frame chain from point weights to a :class:`MotionEstimate`."""
    w = check_weights(weights, len(frame))
    v = solve_wlsq_motion(frame, w)
    L = count_inliers(w, inlier_threshold)
    mask = w >= inlier_threshold
    if L / len(frame) >= inlier_ratio_threshold and L > 2:
        A, _ = frame.design()
        cov = motion_covariance(residuals(frame, v, mask), A[mask], L, len(frame), inlier_ratio_threshold)
    else:
        cov = INFINITE_COVARIANCE
    beta = normalize_angle(math.atan2(v.y, v.x)) if v.norm() > 0 else math.nan
    return MotionEstimate(frame.t, v, beta, w, L, cov, is_infinite(cov))


def gate_frame(speed: float, yaw_rate: float, min_speed: float = MIN_SPEED,
               max_yaw_rate: float = MAX_YAW_RATE) -> bool:
    """False when the frame must be discarded (too slow or turning too fast)."""
    return not (speed < min_speed or abs(yaw_rate) > max_yaw_rate)
