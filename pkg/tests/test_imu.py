import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radcal.errors import DomainError, InsufficientDataError
from radcal.imu import (
    ImuModel,
    ImuSample,
    apply_measurement_model,
    bias_from_stream,
    debias,
    estimate_bias,
    interpolate_rate,
    simulate_readings,
    stationary_mask,
)


def samples(values, dt=0.01):
    return [ImuSample(k * dt, v) for k, v in enumerate(values)]


@pytest.mark.parametrize("true_rate, model, nu, expected", [
    (0.5, ImuModel(1.0, 0.0), 0.0, 0.5),
    (0.5, ImuModel(1.02, 0.01), 0.0, 1.02 * 0.5 + 0.01),
    (0.0, ImuModel(2.0, 0.01), -0.002, 0.008),
])
def test_measurement_model_examples(true_rate, model, nu, expected):
    assert apply_measurement_model(true_rate, model, nu) == pytest.approx(expected, abs=1e-15)


def test_measurement_model_values():
    assert apply_measurement_model(0.5, ImuModel(1.02, 0.01)) == pytest.approx(0.52)


def test_model_validation():
    with pytest.raises(DomainError):
        ImuModel(scale=0.0)
    with pytest.raises(DomainError):
        ImuModel(noise_std=-1.0)


def test_estimate_bias_examples():
    assert estimate_bias(samples([0.012, 0.008, 0.010])) == pytest.approx(0.010, abs=1e-15)
    assert estimate_bias(samples([0.0])) == 0.0
    with pytest.raises(InsufficientDataError):
        estimate_bias([])


def test_estimate_bias_clt_bound():
    b, sigma, T = 0.01, 0.005, 10_000
    rng = np.random.default_rng(2024)
    est = estimate_bias(samples(b + rng.normal(0.0, sigma, T)))
    assert abs(est - b) < 3 * sigma / math.sqrt(T)


def test_bias_error_shrinks_like_inverse_root_t():
    b, sigma = 0.01, 0.005
    rms = {}
    for T in (100, 10_000):
        errs = [estimate_bias(samples(b + np.random.default_rng([T, k]).normal(0.0, sigma, T))) - b
                for k in range(200)]
        rms[T] = math.sqrt(np.mean(np.square(errs)))
        assert rms[T] == pytest.approx(sigma / math.sqrt(T), rel=0.2)
    assert rms[100] / rms[10_000] == pytest.approx(10.0, rel=0.25)


@pytest.mark.parametrize("omega, b, expected", [(0.52, 0.01, 0.51), (0.01, 0.01, 0.0), (-0.3, 0.01, -0.31)])
def test_debias_examples(omega, b, expected):
    assert debias(omega, b) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-3, 3), st.floats(-0.1, 0.1))
def test_debias_round_trip(w, b):
    assert abs(debias(apply_measurement_model(w, ImuModel(1.0, b)), b) - w) < 1e-12


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=50), st.floats(-1, 1))
def test_bias_shift_equivariance(values, c):
    base = estimate_bias(samples(values))
    shifted = estimate_bias(samples([v + c for v in values]))
    assert shifted == pytest.approx(base + c, abs=1e-12)


def test_stationary_mask_requires_min_duration():
    t = np.arange(0, 5.0, 0.1)
    speed = np.where((t < 1.45) | ((t > 3.0) & (t < 3.5)), 0.0, 5.0)
    mask = stationary_mask(t, speed, 0.05, 1.0)
    assert mask[t < 1.45].all()
    assert not mask[t >= 1.45].any()


def test_bias_from_stream_uses_masked_samples_only():
    s = samples([0.01, 0.01, 0.5, 0.7])
    assert bias_from_stream(s, [True, True, False, False]) == pytest.approx(0.01)


def test_interpolate_rate_is_linear_and_held():
    s = [ImuSample(0.0, 0.0), ImuSample(1.0, 1.0)]
    assert list(interpolate_rate(s, [-1.0, 0.25, 2.0])) == [0.0, 0.25, 1.0]


def test_simulate_readings_noise_free_and_seeded():
    rates = np.linspace(-0.5, 0.5, 11)
    out = simulate_readings(rates, ImuModel(1.02, 0.01), np.random.default_rng(0))
    assert np.allclose(out, 1.02 * rates + 0.01, atol=1e-15)
    noisy = ImuModel(1.0, 0.0, 0.01)
    a = simulate_readings(rates, noisy, np.random.default_rng(5))
    b = simulate_readings(rates, noisy, np.random.default_rng(5))
    assert np.array_equal(a, b)
