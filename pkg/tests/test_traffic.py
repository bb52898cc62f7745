"""Burst activation profile."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, stats

from bccrsim.traffic import (
    TrafficModel,
    activation_cdf,
    activation_pdf,
    expected_arrivals_per_slot,
    sample_activation_times,
    slot_of_activation,
)


def test_pdf_integrates_to_one() -> None:
    for alpha, beta, window in ((3.0, 4.0, 1.0), (3.0, 4.0, 10.0), (2.0, 2.0, 0.5)):
        model = TrafficModel(n_ues=1, window_s=window, alpha=alpha, beta=beta)
        total, err = integrate.quad(activation_pdf, 0.0, window, args=(model,))
        assert total == pytest.approx(1.0, abs=max(1e-9, 10 * err))


def test_pdf_reference_point() -> None:
    model = TrafficModel(n_ues=1)
    # Beta(3, 4) density at the window midpoint: 60 * 0.25 * 0.125
    assert activation_pdf(0.5, model) == pytest.approx(1.875, rel=1e-12)


def test_pdf_rejects_times_outside_window() -> None:
    model = TrafficModel(n_ues=1)
    with pytest.raises(ValueError):
        activation_pdf(-0.1, model)
    with pytest.raises(ValueError):
        activation_pdf(1.1, model)


def test_cdf_reference_point() -> None:
    # I(0.5; 3, 4) = 42/64 exactly
    assert activation_cdf(0.5, TrafficModel(n_ues=1)) == 0.65625


def test_cdf_clamps_and_is_monotone() -> None:
    model = TrafficModel(n_ues=1, window_s=2.0)
    assert activation_cdf(-1.0, model) == 0.0
    assert activation_cdf(5.0, model) == 1.0
    grid = np.linspace(0.0, 2.0, 101)
    values = [activation_cdf(t, model) for t in grid]
    assert values[0] == 0.0
    assert values[-1] == 1.0
    assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))


def test_samples_sorted_and_inside_window() -> None:
    model = TrafficModel(n_ues=500, window_s=3.0)
    times = sample_activation_times(model, np.random.default_rng(21))
    assert times.shape == (500,)
    assert np.all(np.diff(times) >= 0)
    assert times[0] >= 0.0
    assert times[-1] <= 3.0


def test_samples_follow_the_profile() -> None:
    model = TrafficModel(n_ues=2000)
    times = sample_activation_times(model, np.random.default_rng(99))
    result = stats.kstest(times, lambda t: stats.beta.cdf(t, 3.0, 4.0))
    assert result.pvalue > 0.01


def test_slot_of_activation_boundaries() -> None:
    assert slot_of_activation(0.0, 0.005) == 0
    assert slot_of_activation(0.005, 0.005) == 1
    assert slot_of_activation(0.0051, 0.005) == 2
    assert slot_of_activation(0.0049, 0.005) == 1


def test_arrivals_per_slot_telescope_to_population() -> None:
    model = TrafficModel(n_ues=750, window_s=1.0)
    period = 0.005
    slots = math.ceil(model.window_s / period)
    total = sum(
        expected_arrivals_per_slot(model, period, s) for s in range(1, slots + 1)
    )
    assert total == pytest.approx(750.0, rel=1e-9)


def test_model_validation() -> None:
    with pytest.raises(ValueError):
        TrafficModel(n_ues=-1)
    with pytest.raises(ValueError):
        TrafficModel(n_ues=1, window_s=0.0)
    with pytest.raises(ValueError):
        TrafficModel(n_ues=1, alpha=0.0)
    with pytest.raises(ValueError):
        TrafficModel(n_ues=1, beta=-2.0)
