"""Access-class barring: static schedules, genie-aided dynamic barring, and
dynamic barring driven by an estimated backlog.

The estimator is a pseudo-Bayesian census: successes leave, expected new
arrivals join, and the gap between the observed and the predicted number
of collided uplink grants nudges the estimate toward the truth.  The
collision gap is scaled by the mean collision multiplicity near the
optimum operating point (~2.39 UEs per collided preamble), converting a
preamble-count error into a UE-count error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Union

import numpy as np

from .analytics import contention_resolution_probability

__all__ = [
    "StaticBarring",
    "DynamicFullState",
    "DynamicEstimated",
    "BarringPolicy",
    "SlotObservation",
    "BacklogEstimator",
    "BarringController",
    "pass_barring",
    "dynamic_barring_probability",
    "update_estimate",
    "draw_backoff",
    "static_schedule_probability",
]


@dataclass(frozen=True)
class StaticBarring:
    """Fixed barring probability, optionally per UE class."""

    probabilities: Union[float, Mapping[str, float]] = 0.0

    def __post_init__(self) -> None:
        values = (
            self.probabilities.values()
            if isinstance(self.probabilities, Mapping)
            else (self.probabilities,)
        )
        for p in values:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"barring probability {p} outside [0, 1]")

    def probability(self, ue_class: str) -> float:
        if isinstance(self.probabilities, Mapping):
            try:
                return self.probabilities[ue_class]
            except KeyError:
                raise ValueError(f"no barring probability for class {ue_class!r}") from None
        return self.probabilities


@dataclass(frozen=True)
class DynamicFullState:
    """Barring probability recomputed each slot from the true backlog
    (genie-aided upper bound for estimator-driven schemes)."""


@dataclass(frozen=True)
class DynamicEstimated:
    """Barring probability recomputed each slot from a running backlog
    estimate fed by per-slot grant observations."""

    gain_collided: float = 2.39
    gain_success: float = 1.0


BarringPolicy = Union[StaticBarring, DynamicFullState, DynamicEstimated]


@dataclass(frozen=True)
class SlotObservation:
    """Per-slot grant outcome counts as seen by the base station: idle
    preambles, decoded uplink grants, collided uplink grants."""

    idle: int
    success: int
    collided: int

    def __post_init__(self) -> None:
        if min(self.idle, self.success, self.collided) < 0:
            raise ValueError("observation counts must be >= 0")

    @property
    def total(self) -> int:
        return self.idle + self.success + self.collided


@dataclass(frozen=True)
class BacklogEstimator:
    """Running backlog estimate plus the model it predicts collisions with:
    the preamble count and the countdown depth in force."""

    preambles: int
    n_hat: float = 0.0
    gain_collided: float = 2.39
    gain_success: float = 1.0
    levels: int = 1

    def __post_init__(self) -> None:
        if self.preambles < 1:
            raise ValueError(f"preambles must be >= 1, got {self.preambles}")
        if self.n_hat < 0:
            raise ValueError(f"n_hat must be >= 0, got {self.n_hat}")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")


def dynamic_barring_probability(n_hat: float, preambles: int) -> float:
    """Bar just enough to admit an expected ``preambles`` contenders:
    max(0, 1 - M/n_hat)."""
    if n_hat < 0:
        raise ValueError(f"n_hat must be >= 0, got {n_hat}")
    if preambles < 1:
        raise ValueError(f"preambles must be >= 1, got {preambles}")
    if n_hat <= preambles:
        return 0.0
    return 1.0 - preambles / n_hat


def _predicted_collided(contenders: float, preambles: int, levels: int) -> float:
    """Expected collided uplink grants when ``contenders`` UEs (fractional
    mean) draw among ``preambles``, after countdown resolution removes the
    share that ends with a unique strongest contender."""
    if contenders <= 1.0:
        return 0.0
    miss = 1.0 - 1.0 / preambles
    singles = contenders * miss ** (contenders - 1.0)
    idle = preambles * miss**contenders
    collided = max(preambles - singles - idle, 0.0)
    if collided <= 1e-12 or levels <= 1:
        return collided
    size = max((contenders - singles) / collided, 1.0)
    return collided * (1.0 - contention_resolution_probability(size, levels))


def update_estimate(
    est: BacklogEstimator,
    observation: SlotObservation,
    new_arrivals_estimate: float,
) -> BacklogEstimator:
    """One estimator step after a slot's grants have been observed.

    n_hat <- max(0, n_hat + a*(C_obs - C_pred) - b*S + A_hat), where
    C_pred is the collided-grant count the current estimate implies.
    """
    if observation.total != est.preambles:
        raise ValueError(
            f"observation counts sum to {observation.total}, expected {est.preambles}"
        )
    if new_arrivals_estimate < 0:
        raise ValueError("new_arrivals_estimate must be >= 0")
    predicted = _predicted_collided(
        min(est.n_hat, float(est.preambles)), est.preambles, est.levels
    )
    n_hat = (
        est.n_hat
        + est.gain_collided * (observation.collided - predicted)
        - est.gain_success * observation.success
        + new_arrivals_estimate
    )
    return replace(est, n_hat=max(n_hat, 0.0))


class BarringController:
    """Per-run barring state machine wrapping a policy descriptor.

    begin_slot fixes this slot's probabilities; end_slot feeds the
    observation back (a no-op except for the estimated policy).
    """

    def __init__(self, policy: BarringPolicy, preambles: int, levels: int = 1):
        self.policy = policy
        self.preambles = preambles
        self._current = 0.0
        if isinstance(policy, DynamicEstimated):
            self.estimator: BacklogEstimator | None = BacklogEstimator(
                preambles=preambles,
                gain_collided=policy.gain_collided,
                gain_success=policy.gain_success,
                levels=levels,
            )
        else:
            self.estimator = None

    def begin_slot(self, true_backlog: int) -> None:
        if isinstance(self.policy, DynamicFullState):
            self._current = dynamic_barring_probability(true_backlog, self.preambles)
        elif isinstance(self.policy, DynamicEstimated):
            assert self.estimator is not None
            self._current = dynamic_barring_probability(
                self.estimator.n_hat, self.preambles
            )

    def probability(self, ue_class: str) -> float:
        if isinstance(self.policy, StaticBarring):
            return self.policy.probability(ue_class)
        return self._current

    def end_slot(self, observation: SlotObservation, new_arrivals_estimate: float) -> None:
        if self.estimator is not None:
            self.estimator = update_estimate(
                self.estimator, observation, new_arrivals_estimate
            )


def pass_barring(policy, ue_class: str, rng: np.random.Generator) -> bool:
    """One UE's barring check: contend with probability 1 - P_b.

    Accepts a StaticBarring descriptor or a BarringController whose slot
    has begun.
    """
    return bool(rng.random() >= policy.probability(ue_class))


def draw_backoff(window: int, rng: np.random.Generator) -> int:
    """Back-off delay in whole slots, uniform over [1, window]."""
    if window < 1:
        raise ValueError(f"backoff window must be >= 1, got {window}")
    return int(rng.integers(1, window + 1))


def static_schedule_probability(
    n_ues: int,
    preambles: int,
    cycle_slots: float,
    load_factor: float = 1.0,
    cap: float = 0.999,
) -> float:
    """Default static barring level for a burst of n_ues.

    Solves steady-state attempts-per-slot = load_factor * preambles at
    full backlog, accounting for the retry cycle (message exchange plus
    mean back-off, ``cycle_slots`` long): a UE that failed re-attempts
    every cycle, so barring only needs to throttle the eligible rest.
    """
    if n_ues < 0:
        raise ValueError(f"n_ues must be >= 0, got {n_ues}")
    if preambles < 1 or cycle_slots < 0 or load_factor <= 0:
        raise ValueError("invalid schedule parameters")
    target = load_factor * preambles
    denom = n_ues - target * cycle_slots
    if denom <= target:  # small bursts never need barring
        return 0.0
    return min(1.0 - target / denom, cap)
