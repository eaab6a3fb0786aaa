"""JSON configuration documents for the simulator, estimator and benchmark.

Every model fills in defaults, so ``model_dump()`` of a parsed config is the
fully specified run configuration echoed into reports.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal

import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from radcal.core import MountPose
from radcal.errors import ValidationError
from radcal.imu import ImuModel
from radcal.motion import RansacConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Segment(_Strict):
    """Linear ramps of speed (m/s) and yaw rate (rad/s) over ``duration`` seconds."""

    duration: float = Field(gt=0)
    speed_start: float = Field(ge=0)
    speed_end: float = Field(ge=0)
    yaw_rate_start: float = 0.0
    yaw_rate_end: float = 0.0


def mixed_turn_segments(driving_time: float, speed: float = 10.0, yaw_amplitude: float = 0.4,
                        accel_time: float = 3.0, speed_swing: float = 3.0) -> list[Segment]:
    """Accelerate from rest, then repeat a left/right turn cycle (8 s) until ``driving_time``.

    Profiles are continuous, so sampled streams interpolate exactly between samples.
    """
    segs = [Segment(duration=accel_time, speed_start=0.0, speed_end=speed)]
    A, lo, hi = yaw_amplitude, speed, speed + speed_swing
    cycle = [
        (1.5, lo, hi, 0.0, A),
        (1.0, hi, hi, A, A),
        (3.0, hi, lo, A, -A),
        (1.0, lo, lo, -A, -A),
        (1.5, lo, lo, -A, 0.0),
    ]
    t = accel_time
    while t < driving_time:
        for dur, v0, v1, w0, w1 in cycle:
            segs.append(Segment(duration=dur, speed_start=v0, speed_end=v1, yaw_rate_start=w0, yaw_rate_end=w1))
            t += dur
    return segs


def _default_segments():
    return mixed_turn_segments(23.0)


class MountConfig(_Strict):
    x_s: float = 3.6
    y_s: float = -0.6
    theta_deg: float = 25.0

    def pose(self) -> MountPose:
        return MountPose(self.x_s, self.y_s, math.radians(self.theta_deg))


class ImuModelConfig(_Strict):
    scale: float = Field(1.0, gt=0)
    bias: float = 0.01
    noise_std: float = Field(0.0, ge=0)

    def model(self) -> ImuModel:
        return ImuModel(self.scale, self.bias, self.noise_std)


class NoiseConfig(_Strict):
    sigma_azimuth: float = Field(0.0, ge=0, description="rad")
    sigma_doppler: float = Field(0.0, ge=0, description="m/s")


class ScenarioConfig(_Strict):
    duration: float = Field(25.0, gt=0)
    frame_rate: float = Field(17.0, gt=0)
    imu_rate: float = Field(100.0, gt=0)
    stationary_duration: float = Field(2.0, ge=0)
    mount: MountConfig = MountConfig()
    imu_model: ImuModelConfig = ImuModelConfig()
    segments: list[Segment] = Field(default_factory=_default_segments)
    detections_per_frame: int = Field(60, ge=2)
    mover_ratio: float = Field(0.0, ge=0, le=1)
    clutter_ratio: float = Field(0.0, ge=0, le=1)
    mover_objects: int = Field(3, ge=1)
    mover_speed_range: tuple[float, float] = (2.0, 15.0)
    clutter_doppler_max: float = Field(30.0, gt=0)
    range_limits: tuple[float, float] = (1.0, 100.0)
    noise: NoiseConfig = NoiseConfig()
    accel_doppler_coeff: float = Field(0.05, ge=0, description="s; extra Doppler std per m/s^2")
    fov_half_angle: float = Field(math.radians(75.0), gt=0, le=math.pi)
    seed: int = Field(42, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _ratios(self):
        if self.mover_ratio + self.clutter_ratio > 1.0:
            raise ValueError("mover_ratio + clutter_ratio must not exceed 1")
        lo, hi = self.mover_speed_range
        if not 0 <= lo <= hi:
            raise ValueError("mover_speed_range must satisfy 0 <= min <= max")
        if not 0 <= self.range_limits[0] <= self.range_limits[1]:
            raise ValueError("range_limits must satisfy 0 <= min <= max")
        return self


class RansacSection(_Strict):
    doppler_threshold: float = Field(0.2, gt=0)
    iterations: int = Field(100, ge=1)
    min_inliers: int = Field(5, ge=2)
    seed: int = Field(0, ge=0, lt=2**64)

    def ransac(self) -> RansacConfig:
        return RansacConfig(self.doppler_threshold, self.iterations, self.min_inliers, self.seed)


class GatingSection(_Strict):
    min_speed: float = 1.0
    max_yaw_rate_deg: float = 140.0


class StationarySection(_Strict):
    speed_threshold: float = Field(0.05, gt=0)
    min_duration: float = Field(1.0, ge=0)
    bias_override: float | None = None


class OdrSection(_Strict):
    sigma_beta: float | None = Field(None, gt=0)
    sigma_chi: float | None = Field(None, gt=0)
    sigma_omega: float = Field(0.0, ge=0)
    max_iter: int = Field(50, ge=1)


Estimator = Literal["wlsq", "mean", "kabsch", "odr"]
ESTIMATORS: tuple[str, ...] = ("wlsq", "mean", "kabsch", "odr")


class EstimateConfig(_Strict):
    mount: MountConfig = MountConfig()
    weights: Literal["ransac", "unit", "external"] = "ransac"
    ransac: RansacSection = RansacSection()
    inlier_threshold: float = Field(0.5, gt=0, le=1)
    inlier_ratio_threshold: float = Field(0.3, ge=0, le=1)
    gating: GatingSection = GatingSection()
    stationary: StationarySection = StationarySection()
    estimator: Literal["wlsq", "mean", "kabsch", "odr", "all"] = "all"
    kabsch_scale: Literal["unit", "wlsq"] = "unit"
    odr: OdrSection = OdrSection()
    variance_floor: float = Field(1e-12, gt=0)

    def estimators(self) -> tuple[str, ...]:
        return ESTIMATORS if self.estimator == "all" else (self.estimator,)


class NoiseLevel(_Strict):
    sigma_doppler: float = Field(ge=0)
    sigma_azimuth: float = Field(ge=0)
    imu_noise_std: float = Field(0.0, ge=0)


class RteSection(_Strict):
    enabled: bool = True
    route_length: float = Field(2000.0, gt=0)
    speed: float = Field(15.0, gt=1)
    yaw_amplitude: float = 0.05
    segment_length: float = Field(50.0, gt=0)
    angle_biases_deg: list[float] = [0.0, 0.05, 0.1, 0.5]
    align_heading: bool = True


class BenchmarkConfig(_Strict):
    scenario: ScenarioConfig = ScenarioConfig(mover_ratio=0.2, clutter_ratio=0.1,
                                              noise=NoiseConfig(sigma_doppler=0.1, sigma_azimuth=math.radians(0.3)),
                                              imu_model=ImuModelConfig(scale=1.02, bias=0.01, noise_std=0.002))
    estimate: EstimateConfig = EstimateConfig()
    seeds: int = Field(20, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    intervals: list[float] = [5.0, 10.0, 25.0, 60.0]
    noise_levels: list[NoiseLevel] = []
    mover_ratios: list[float] = [0.0, 0.2, 0.4, 0.6]
    outlier_duration: float = Field(25.0, gt=0)
    rte: RteSection = RteSection()

    @model_validator(mode="after")
    def _check(self):
        if any(i <= 0 for i in self.intervals):
            raise ValueError("intervals must be positive")
        if any(not 0 <= r <= 1 for r in self.mover_ratios):
            raise ValueError("mover_ratios must lie in [0, 1]")
        return self


def _problems(err: pydantic.ValidationError) -> list[str]:
    out = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        out.append(f"{loc}: {e['msg']}")
    return out


def parse_config(model: type[BaseModel], data: dict):
    try:
        return model.model_validate(data)
    except pydantic.ValidationError as err:
        raise ValidationError(f"invalid {model.__name__}", _problems(err)) from None


def load_config(model: type[BaseModel], path) -> BaseModel:
    """Read a JSON config file; raises :class:`ValidationError` listing every bad field."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValidationError(f"{path}: not valid JSON ({err})") from None
    return parse_config(model, data)
