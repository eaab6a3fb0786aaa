"""Mounting-angle estimators.

All estimators consume per-frame :class:`LateralObservation` records built
from a radar motion estimate and a debiased yaw rate. The lateral velocity of
the sensor is fixed by the vehicle rotation alone (no side-slip):

    |V| sin(beta + theta) = (omega_debiased / s) * x_s

With ``chi = omega_debiased * x_s / |V|`` and ``s' = 1 / s`` this is
``beta = asin(s' chi) - theta``; the joint solver linearizes it once around
``s' = 1`` and solves the stacked system by frame-weighted least squares.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from radcal.core import EgoState, MountPose, Vec2, motion_direction, normalize_angle, sensor_velocity
from radcal.errors import DomainError, InsufficientDataError, UnobservableScaleError
from radcal.motion import MotionEstimate, is_infinite

log = logging.getLogger(__name__)

CHI_CLAMP_EPS = 1e-9
# variance floor (m/s)^2 so that exact (zero-residual) frames get a finite weight
VARIANCE_FLOOR = 1e-12
# weighted variance of the s' regressor below which s' is not identifiable
_SCALE_OBSERVABILITY_TOL = 1e-12


@dataclass(frozen=True)
class LateralObservation:
    t: float
    beta: float
    chi: float
    eta: float
    speed_norm: float
    clamped: bool = False


@dataclass(frozen=True)
class CalibrationSolution:
    theta: float
    s_prime: float
    frames_used: int
    residual_norm: float
    estimator: str = "wlsq"
    converged: bool = True
    fallback: str | None = None

    @property
    def scale(self) -> float:
        return 1.0 / self.s_prime

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)


def lateral_observation(est: MotionEstimate, omega_debiased: float, x_s: float,
                        var_floor: float = VARIANCE_FLOOR) -> LateralObservation:
    speed = est.v.norm()
    if not speed > 0.0:
        raise InsufficientDataError("zero radar velocity carries no direction")
    beta = motion_direction(est.v)
    chi = omega_debiased * x_s / speed
    limit = 1.0 - CHI_CLAMP_EPS
    clamped = abs(chi) > limit
    if clamped:
        log.info("t=%.3f: lateral ratio %.6f clamped to +-%.9f", est.t, chi, limit)
        chi = math.copysign(limit, chi)
    if est.sparse or is_infinite(est.covariance):
        eta = 0.0
    else:
        eta = 1.0 / max(float(est.covariance[0, 0] + est.covariance[1, 1]), var_floor)
    return LateralObservation(est.t, beta, chi, eta, speed, clamped)


def taylor_row(chi: float, beta: float) -> tuple[float, np.ndarray]:
    """One row ``(y, u)`` of the stacked system, linearized at ``s' = 1``."""
    if not abs(chi) < 1.0:
        raise DomainError(f"|chi| must be < 1, got {chi!r}")
    g = chi / math.sqrt(1.0 - chi * chi)
    return beta - math.asin(chi) + g, np.array([-1.0, g])


def _active(obs: Sequence[LateralObservation]):
    picked = [o for o in obs if o.eta > 0.0]
    chi = np.array([o.chi for o in picked], dtype=float)
    beta = np.array([o.beta for o in picked], dtype=float)
    eta = np.array([o.eta for o in picked], dtype=float)
    if eta.size:
        eta = eta / eta.max()
    return chi, beta, eta


def _unwrap_about_first(angles: np.ndarray) -> np.ndarray:
    """Shift each angle by multiples of 2*pi to lie within pi of the first."""
    if angles.size == 0:
        return angles
    ref = angles[0]
    return ref + np.mod(angles - ref + np.pi, 2.0 * np.pi) - np.pi


def solve_wlsq_angle(obs: Sequence[LateralObservation]) -> CalibrationSolution:
    """Joint ``(theta, s')`` by one Taylor step at ``s' = 1`` and weighted LSQ."""
    chi, beta, q = _active(obs)
    if q.size < 3:
        raise InsufficientDataError(f"need >= 3 weighted frames, have {q.size}")
    if np.any(np.abs(chi) >= 1.0):
        raise DomainError("lateral ratios must be clamped into (-1, 1)")
    g = chi / np.sqrt(1.0 - chi * chi)
    y = _unwrap_about_first(beta - np.arcsin(chi) + g)
    U = np.column_stack([-np.ones_like(g), g])

    sq = q.sum()
    g_mean = (q @ g) / sq
    if (q @ (g - g_mean) ** 2) / sq <= _SCALE_OBSERVABILITY_TOL:
        raise UnobservableScaleError(
            "lateral ratios carry no spread (straight driving); "
            "fall back to the weighted mean with s' = 1"
        )
    N = U.T @ (q[:, None] * U)
    rhs = U.T @ (q * y)
    x = np.linalg.solve(N, rhs)
    r = y - U @ x
    return CalibrationSolution(
        theta=normalize_angle(x[0]),
        s_prime=float(x[1]),
        frames_used=int(q.size),
        residual_norm=float(math.sqrt((q @ (r * r)) / sq)),
        estimator="wlsq",
    )


def solve_weighted_mean_angle(obs: Sequence[LateralObservation]) -> float:
    """Frame-weighted average of per-frame angles ``asin(chi) - beta`` (unit scale)."""
    chi, beta, q = _active(obs)
    if q.size == 0:
        raise InsufficientDataError("all frames have zero weight")
    terms = _unwrap_about_first(np.arcsin(chi) - beta)
    return normalize_angle((q @ terms) / q.sum())


def weighted_mean_solution(obs: Sequence[LateralObservation], fallback: str | None = None) -> CalibrationSolution:
    theta = solve_weighted_mean_angle(obs)
    chi, beta, q = _active(obs)
    r = _unwrap_about_first(np.arcsin(chi) - beta - theta)
    r = np.mod(r + np.pi, 2.0 * np.pi) - np.pi
    return CalibrationSolution(
        theta=theta,
        s_prime=1.0,
        frames_used=int(q.size),
        residual_norm=float(math.sqrt((q @ (r * r)) / q.sum())),
        estimator="mean",
        fallback=fallback,
    )


def solve_kabsch_angle(radar_vs, predicted_vs, etas) -> float:
    """Weighted 2D Procrustes rotation taking radar-frame velocities onto predicted ones.

    Minimizes ``sum eta |R(theta) v_radar - v_pred|^2``; closed form
    ``atan2(sum eta (r x p), sum eta (r . p))``.
    """
    r = np.asarray(radar_vs, dtype=float).reshape(-1, 2)
    p = np.asarray(predicted_vs, dtype=float).reshape(-1, 2)
    w = np.asarray(etas, dtype=float).reshape(-1)
    if not (r.shape == p.shape and r.shape[0] == w.shape[0]) or w.size == 0:
        raise InsufficientDataError("velocity lists and weights must have equal, non-zero length")
    keep = w > 0
    r, p, w = r[keep], p[keep], w[keep]
    if w.size:
        w = w / w.max()
    cross = w @ (r[:, 0] * p[:, 1] - r[:, 1] * p[:, 0])
    dot = w @ (r[:, 0] * p[:, 0] + r[:, 1] * p[:, 1])
    if cross == 0.0 and dot == 0.0:
        raise InsufficientDataError("no non-zero velocity pairs")
    return normalize_angle(math.atan2(cross, dot))


def predicted_sensor_velocities(speeds, omegas_debiased, mount: MountPose, s_prime: float = 1.0) -> list[Vec2]:
    """Vehicle-frame sensor velocities from odometry speed and (rescaled) yaw rate."""
    return [
        sensor_velocity(EgoState(0.0, float(v), float(w) * s_prime), mount)
        for v, w in zip(speeds, omegas_debiased)
    ]


def kabsch_solution(estimates: Sequence[MotionEstimate], etas, speeds, omegas_debiased,
                    mount: MountPose, s_prime: float = 1.0) -> CalibrationSolution:
    radar = [e.v for e in estimates]
    pred = predicted_sensor_velocities(speeds, omegas_debiased, mount, s_prime)
    theta = solve_kabsch_angle(radar, pred, etas)
    w = np.asarray(etas, dtype=float)
    keep = w > 0
    r = np.asarray(radar, dtype=float)[keep]
    p = np.asarray(pred, dtype=float)[keep]
    c, s = math.cos(theta), math.sin(theta)
    rotated = r @ np.array([[c, s], [-s, c]])
    err = np.linalg.norm(rotated - p, axis=1)
    ww = w[keep] / w[keep].max()
    return CalibrationSolution(
        theta=theta,
        s_prime=s_prime,
        frames_used=int(keep.sum()),
        residual_norm=float(math.sqrt((ww @ (err * err)) / ww.sum())),
        estimator="kabsch",
    )


def default_odr_sigmas(obs: Sequence[LateralObservation], x_s: float, sigma_omega: float = 0.0,
                       floor: float = 1e-9) -> tuple[float, float]:
    """Median per-frame noise scales of beta and chi propagated from the motion covariance."""
    picked = [o for o in obs if o.eta > 0.0]
    if not picked:
        raise InsufficientDataError("no weighted frames")
    sig_v = np.sqrt(0.5 / np.array([o.eta for o in picked]))
    speed = np.array([o.speed_norm for o in picked])
    chi = np.array([o.chi for o in picked])
    s_beta = sig_v / speed
    s_chi = np.hypot(chi * sig_v / speed, sigma_omega * x_s / speed)
    return max(float(np.median(s_beta)), floor), max(float(np.median(s_chi)), floor)


def solve_odr_angle(obs: Sequence[LateralObservation], sigma_beta: float, sigma_chi: float,
                    max_iter: int = 50, tol: float = 1e-10) -> CalibrationSolution:
    """Errors-in-variables fit of ``beta = asin(s' chi) - theta``.

    Both beta and chi are treated as noisy; the true ratios enter as latent
    unknowns that are eliminated per frame (Schur complement), so each
    Gauss-Newton step costs O(T). Starts from :func:`solve_wlsq_angle`.
    """
    if not (sigma_beta > 0 and sigma_chi > 0):
        raise DomainError("ODR noise scales must be positive")
    start = solve_wlsq_angle(obs)
    chi, beta, q = _active(obs)
    a = np.sqrt(q) / sigma_beta
    b = np.sqrt(q) / sigma_chi
    limit = 1.0 - CHI_CLAMP_EPS

    def evaluate(theta, sp, c):
        e = a * np.mod(beta + theta - np.arcsin(np.clip(sp * c, -limit, limit)) + np.pi, 2 * np.pi) - a * np.pi
        f = b * (chi - c)
        return e, f

    theta, sp = start.theta, start.s_prime
    c = np.clip(chi, -limit / abs(sp), limit / abs(sp))
    e, f = evaluate(theta, sp, c)
    cost = float(e @ e + f @ f)
    converged = False
    for _ in range(max_iter):
        inv_root = 1.0 / np.sqrt(1.0 - np.clip(sp * c, -limit, limit) ** 2)
        je_p = np.column_stack([a, -a * c * inv_root])
        je_c = -a * sp * inv_root
        h_cc = je_c * je_c + b * b
        h_pc = je_p * je_c[:, None]
        g_p = je_p.T @ e
        g_c = je_c * e - b * f
        schur = je_p.T @ je_p - (h_pc / h_cc[:, None]).T @ h_pc
        rhs = -(g_p - h_pc.T @ (g_c / h_cc))
        dp = np.linalg.solve(schur, rhs)
        dc = -(g_c + h_pc @ dp) / h_cc

        step = 1.0
        while True:
            t_new, sp_new = theta + step * dp[0], sp + step * dp[1]
            c_new = np.clip(c + step * dc, -limit / abs(sp_new), limit / abs(sp_new))
            e_new, f_new = evaluate(t_new, sp_new, c_new)
            cost_new = float(e_new @ e_new + f_new @ f_new)
            if cost_new <= cost or step < 1e-6:
                break
            step *= 0.5
        small = max(abs(step * dp[0]), abs(step * dp[1]), float(np.max(np.abs(step * dc)))) < tol
        if cost_new <= cost:
            theta, sp, c, e, f, cost = t_new, sp_new, c_new, e_new, f_new, cost_new
        if small or cost_new > cost:
            converged = small
            break

    r = np.concatenate([e, f])
    return CalibrationSolution(
        theta=normalize_angle(theta),
        s_prime=float(sp),
        frames_used=int(q.size),
        residual_norm=float(math.sqrt((r @ r) / q.sum())),
        estimator="odr",
        converged=converged,
    )
