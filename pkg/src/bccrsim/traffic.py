"""Bursty activation traffic.

A population of N UEs wakes up inside an activation window of length
window_s, with activation instants following a scaled Beta(alpha, beta)
density, the standard smooth burst profile peaking early in the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "TrafficModel",
    "activation_pdf",
    "activation_cdf",
    "sample_activation_times",
    "slot_of_activation",
    "expected_arrivals_per_slot",
]


@dataclass(frozen=True)
class TrafficModel:
    n_ues: int
    window_s: float = 1.0
    alpha: float = 3.0
    beta: float = 4.0

    def __post_init__(self) -> None:
        if self.n_ues < 0:
            raise ValueError(f"n_ues must be >= 0, got {self.n_ues}")
        if self.window_s <= 0:
            raise ValueError(f"window_s must be > 0, got {self.window_s}")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be > 0")


def activation_pdf(t: float, model: TrafficModel) -> float:
    """Activation density at time t:
    t^(a-1) (T-t)^(b-1) / (T^(a+b-1) B(a, b)), which integrates to one
    over [0, T] for any window length."""
    T = model.window_s
    if not 0 <= t <= T:
        raise ValueError(f"t={t} outside the activation window [0, {T}]")
    a, b = model.alpha, model.beta
    norm = T ** (a + b - 1) * special.beta(a, b)
    return t ** (a - 1) * (T - t) ** (b - 1) / norm


def activation_cdf(t: float, model: TrafficModel) -> float:
    """Fraction of the population active by time t (clamped outside the
    window)."""
    x = min(max(t / model.window_s, 0.0), 1.0)
    return float(special.betainc(model.alpha, model.beta, x))


def sample_activation_times(
    model: TrafficModel, rng: np.random.Generator
) -> np.ndarray:
    """Draw the population's activation instants, sorted ascending."""
    times = rng.beta(model.alpha, model.beta, size=model.n_ues) * model.window_s
    times.sort()
    return times


def slot_of_activation(t: float, slot_period: float) -> int:
    """First slot a UE activating at time t may contend in: the next slot
    boundary (a UE cannot transmit in a slot that already started)."""
    return math.ceil(t / slot_period)


def expected_arrivals_per_slot(
    model: TrafficModel, slot_period: float, slot: int
) -> float:
    """Expected number of UEs whose first eligible slot is the given one."""
    hi = activation_cdf(slot * slot_period, model)
    lo = activation_cdf((slot - 1) * slot_period, model)
    return model.n_ues * (hi - lo)
