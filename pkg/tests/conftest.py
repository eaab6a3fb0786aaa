import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from radcal.config import EstimateConfig, NoiseConfig, ScenarioConfig
from radcal.core import EgoState, MountPose
from radcal.motion import RadarFrame, predicted_doppler

settings.register_profile("radcal", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("radcal")

# criterion number -> list of (passed, detail); filled from tests marked ``criterion``
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    details = [v for k, v in item.user_properties if k == "detail"]
    detail = "; ".join(details) or item.name
    ACCEPTANCE.setdefault(marker.args[0], []).append((report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        rows = ACCEPTANCE[k]
        ok = all(r[0] for r in rows)
        detail = " | ".join(r[1] for r in rows)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")


def clean_scenario(**update) -> ScenarioConfig:
    """Noise-free, outlier-free default scene with optional overrides."""
    data = {"noise": {"sigma_doppler": 0.0, "sigma_azimuth": 0.0}, "mover_ratio": 0.0, "clutter_ratio": 0.0,
            "accel_doppler_coeff": 0.0, "imu_model": {"scale": 1.0, "bias": 0.01, "noise_std": 0.0}}
    data.update(update)
    return ScenarioConfig.model_validate(data)


def moderate_scenario(seed: int, **update) -> ScenarioConfig:
    data = {"seed": seed, "mover_ratio": 0.2, "clutter_ratio": 0.1,
            "noise": NoiseConfig(sigma_doppler=0.1, sigma_azimuth=math.radians(0.3)).model_dump(),
            "imu_model": {"scale": 1.02, "bias": 0.01, "noise_std": 0.002}}
    data.update(update)
    return ScenarioConfig.model_validate(data)


def estimate_config(cfg: ScenarioConfig, **update) -> EstimateConfig:
    data = {"mount": {"x_s": cfg.mount.x_s, "y_s": cfg.mount.y_s, "theta_deg": 0.0}}
    data.update(update)
    return EstimateConfig.model_validate(data)


def static_frame(v, azimuths, t=0.0, sigma=0.0, rng=None) -> RadarFrame:
    az = np.asarray(azimuths, dtype=float)
    d = predicted_doppler(v, az)
    if sigma > 0:
        d = d + rng.normal(0.0, sigma, az.size)
    return RadarFrame(t, az, d)


@pytest.fixture
def mount25():
    return MountPose(3.6, -0.6, math.radians(25.0))


@pytest.fixture
def turning_ego():
    return EgoState(1.0, 10.0, 0.5)
