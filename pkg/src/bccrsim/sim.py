"""Discrete-event simulation of the four-step random-access procedure.

Time advances in PRACH slots.  Each slot: dormant UEs whose activation
instant has passed join the backlog, backlogged UEs run the barring
check, the passing contenders draw preambles, and each activated
preamble is resolved: singleton UEs succeed, collided preambles run the
countdown period when it is configured.  MSG3/MSG4 outcomes are resolved
synchronously at the MSG1 slot with completion and back-off instants
computed arithmetically: a winner connects at slot + d13 + d34, a
countdown loser learns during the CR period and becomes eligible again
from slot + d13 + backoff, and an unresolved MSG3 collision waits out
the MSG4 timer until slot + d13 + d34 + backoff.

Randomness is split into named sub-streams (activation, barring,
preamble, priority, backoff) spawned from the scenario seed, so enabling
the countdown does not perturb the preamble draws of an otherwise
identical run.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .analytics import BccrConfig, ResourceModel
from .barring import (
    BarringController,
    BarringPolicy,
    DynamicEstimated,
    SlotObservation,
)
from .bccr import ClassBandPolicy, UniformRandomPolicy, two_class_bands
from .traffic import TrafficModel, expected_arrivals_per_slot

__all__ = [
    "Phase",
    "Scenario",
    "SlotEvents",
    "SlotResolution",
    "RunMetrics",
    "HorizonExceeded",
    "Simulation",
    "substreams",
    "resolve_slot",
    "run",
    "replicate",
]

STREAM_NAMES = ("activation", "barring", "preamble", "priority", "backoff")


class HorizonExceeded(RuntimeError):
    """The run outlived its slot horizon without draining the backlog."""


class Phase(enum.IntEnum):
    DORMANT = 0
    BACKLOGGED = 1
    BACKING_OFF = 2
    CONNECTED = 3
    DROPPED = 4


def substreams(seed: int, replicate_index: int = 0) -> dict[str, np.random.Generator]:
    """Named independent generators derived from one scenario seed."""
    root = np.random.SeedSequence(seed, spawn_key=(replicate_index,))
    children = root.spawn(len(STREAM_NAMES))
    return {name: np.random.default_rng(c) for name, c in zip(STREAM_NAMES, children)}


@dataclass(frozen=True)
class Scenario:
    """Everything a run depends on; two equal scenarios produce
    bit-identical metrics."""

    traffic: TrafficModel
    seed: int
    bccr: BccrConfig | None = None
    barring: BarringPolicy = field(default_factory=DynamicEstimated)
    priority_policy: UniformRandomPolicy | ClassBandPolicy | None = None
    resources: ResourceModel = field(default_factory=ResourceModel)
    class_mix: Mapping[str, float] = field(default_factory=lambda: {"default": 1.0})
    preamble_count: int = 30
    slot_period: float = 0.005
    msg1_to_msg3_slots: int = 3
    msg3_to_msg4_slots: int = 2
    backoff_window: int = 20
    retry_cap: int | None = None
    horizon_slots: int = 1_000_000
    replicate_index: int = 0

    def __post_init__(self) -> None:
        if self.preamble_count < 1:
            raise ValueError(f"preamble_count must be >= 1, got {self.preamble_count}")
        if self.slot_period <= 0:
            raise ValueError(f"slot_period must be > 0, got {self.slot_period}")
        if self.msg1_to_msg3_slots < 0 or self.msg3_to_msg4_slots < 0:
            raise ValueError("message delays must be >= 0")
        if self.backoff_window < 1:
            raise ValueError(f"backoff_window must be >= 1, got {self.backoff_window}")
        if self.retry_cap is not None and self.retry_cap < 0:
            raise ValueError(f"retry_cap must be >= 0, got {self.retry_cap}")
        if self.horizon_slots < 1:
            raise ValueError(f"horizon_slots must be >= 1, got {self.horizon_slots}")
        if not self.class_mix:
            raise ValueError("class_mix must name at least one class")
        total = sum(self.class_mix.values())
        if any(f < 0 for f in self.class_mix.values()) or abs(total - 1.0) > 1e-9:
            raise ValueError(f"class fractions must be >= 0 and sum to 1, got {total}")

    def resolved_priority_policy(self) -> UniformRandomPolicy | ClassBandPolicy | None:
        """Fill the default policy: class bands for the two-class mix,
        uniform otherwise."""
        if self.bccr is None or self.bccr.levels == 1:
            return None
        if self.priority_policy is not None:
            if self.priority_policy.levels > self.bccr.levels:
                raise ValueError(
                    "priority policy uses more levels than the countdown encodes"
                )
            return self.priority_policy
        if set(self.class_mix) == {"prio", "nonprio"}:
            return two_class_bands(self.bccr.levels)
        return UniformRandomPolicy(self.bccr.levels)


@dataclass(frozen=True)
class SlotEvents:
    """Per-slot trace record."""

    slot: int
    contenders: int
    activated: int
    successes: int
    collisions: int


@dataclass(frozen=True)
class SlotResolution:
    """Per-contender outcome of one slot, positions matching the inputs."""

    WIN = 0
    LOSE_CRS = 1
    LOSE_TIMEOUT = 2

    outcome: np.ndarray
    activated: int
    successes: int
    collisions: int


def resolve_slot(
    preamble_choices: np.ndarray, priorities: np.ndarray | None
) -> SlotResolution:
    """Resolve one slot's contention given everyone's draws.

    With priorities, each collided preamble ends with the unique holder of
    the strongest (lowest) priority if there is one (the countdown
    outcome), and everyone else on it loses during the CR period; a tie
    collides in MSG3.  Without priorities every collided preamble times
    out whole.
    """
    c = len(preamble_choices)
    outcome = np.empty(c, dtype=np.int8)
    order = np.argsort(preamble_choices, kind="stable")
    activated = successes = collisions = 0
    start = 0
    while start < c:
        stop = start
        while stop < c and preamble_choices[order[stop]] == preamble_choices[order[start]]:
            stop += 1
        group = order[start:stop]
        activated += 1
        if len(group) == 1:
            outcome[group] = SlotResolution.WIN
            successes += 1
        elif priorities is None:
            outcome[group] = SlotResolution.LOSE_TIMEOUT
            collisions += 1
        else:
            pri = priorities[group]
            best = pri.min()
            holders = group[pri == best]
            if len(holders) == 1:
                outcome[group] = SlotResolution.LOSE_CRS
                outcome[holders] = SlotResolution.WIN
                successes += 1
            else:
                outcome[group] = SlotResolution.LOSE_CRS
                outcome[holders] = SlotResolution.LOSE_TIMEOUT
                collisions += 1
        start = stop
    return SlotResolution(
        outcome=outcome, activated=activated, successes=successes, collisions=collisions
    )


@dataclass(frozen=True)
class RunMetrics:
    """Outcome of one run: latency samples, resource use, per-slot trace."""

    class_names: tuple[str, ...]
    ue_class: np.ndarray  # per-UE class index into class_names
    service_times: np.ndarray  # per-UE seconds, NaN where never connected
    attempts: np.ndarray  # per-UE failed attempts
    connected: int
    dropped: int
    slots: int
    resources_spent: float
    trace: tuple[SlotEvents, ...]

    @property
    def samples(self) -> np.ndarray:
        return self.service_times[~np.isnan(self.service_times)]

    @property
    def mean_service_time(self) -> float:
        s = self.samples
        return float(s.mean()) if s.size else math.nan

    @property
    def p99_service_time(self) -> float:
        s = self.samples
        return float(np.percentile(s, 99)) if s.size else math.nan

    @property
    def effective_throughput(self) -> float:
        return self.connected / self.resources_spent if self.resources_spent else 0.0

    @property
    def completion_fraction(self) -> float:
        n = len(self.service_times)
        return self.connected / n if n else 1.0

    def class_samples(self, name: str) -> np.ndarray:
        idx = self.class_names.index(name)
        mask = (self.ue_class == idx) & ~np.isnan(self.service_times)
        return self.service_times[mask]


def _stripe_classes(mix: Sequence[tuple[str, float]], n_ues: int) -> np.ndarray:
    """Deterministic proportional interleaving of class labels over UE
    indices (quota method), so class is independent of activation order."""
    assigned = np.zeros(len(mix), dtype=np.int64)
    out = np.empty(n_ues, dtype=np.int8)
    fracs = np.array([f for _, f in mix])
    for i in range(n_ues):
        deficit = fracs * (i + 1) - assigned
        pick = int(np.argmax(deficit))
        out[i] = pick
        assigned[pick] += 1
    return out


class Simulation:
    """Mutable run state; step() advances one PRACH slot."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        n = scenario.traffic.n_ues
        self.rngs = substreams(scenario.seed, scenario.replicate_index)
        self.M = scenario.preamble_count
        t = scenario.traffic
        times = self.rngs["activation"].beta(t.alpha, t.beta, size=n) * t.window_s
        self.activation_time = times
        self.activation_slot = np.ceil(times / scenario.slot_period).astype(np.int64)
        mix = list(scenario.class_mix.items())
        self.class_names = tuple(name for name, _ in mix)
        self.ue_class = _stripe_classes(mix, n)
        self.phase = np.full(n, Phase.DORMANT, dtype=np.int8)
        self.next_eligible = np.zeros(n, dtype=np.int64)
        self.attempts = np.zeros(n, dtype=np.int32)
        self.service_time = np.full(n, np.nan)
        self.resources_spent = 0.0
        self.trace: list[SlotEvents] = []
        self.policy = scenario.resolved_priority_policy()
        levels = scenario.bccr.levels if scenario.bccr else 1
        self.controller = BarringController(scenario.barring, self.M, levels=levels)
        if self.policy is None:
            self._band_lo = self._band_hi = None
        else:
            self._band_lo = np.array(
                [self.policy.band(name).start for name in self.class_names], dtype=np.int64
            )
            self._band_hi = np.array(
                [self.policy.band(name).stop for name in self.class_names], dtype=np.int64
            )
        cfg = scenario.bccr
        if cfg is None or cfg.levels == 1:
            self._grant_cost = scenario.resources.msg3_cost
        else:
            self._grant_cost = cfg.crs_count * cfg.crs_cost + scenario.resources.msg3_cost
        self._estimating = isinstance(scenario.barring, DynamicEstimated)

    def step(self, slot: int) -> SlotEvents:
        sc = self.scenario
        phase, eligible = self.phase, self.next_eligible
        waking = (phase == Phase.BACKING_OFF) & (eligible <= slot)
        phase[waking] = Phase.BACKLOGGED
        arriving = (phase == Phase.DORMANT) & (self.activation_slot <= slot)
        phase[arriving] = Phase.BACKLOGGED
        backlog = np.flatnonzero(phase == Phase.BACKLOGGED)

        self.controller.begin_slot(len(backlog))
        if len(backlog):
            p_by_class = np.array(
                [self.controller.probability(name) for name in self.class_names]
            )
            p_vec = p_by_class[self.ue_class[backlog]]
            passed = self.rngs["barring"].random(len(backlog)) >= p_vec
            contenders = backlog[passed]
        else:
            contenders = backlog

        if len(contenders):
            choices = self.rngs["preamble"].integers(0, self.M, len(contenders))
            if self.policy is not None:
                cls = self.ue_class[contenders]
                priorities = self.rngs["priority"].integers(
                    self._band_lo[cls], self._band_hi[cls]
                )
            else:
                priorities = None
            res = resolve_slot(choices, priorities)
            winners = contenders[res.outcome == SlotResolution.WIN]
            phase[winners] = Phase.CONNECTED
            done = slot + sc.msg1_to_msg3_slots + sc.msg3_to_msg4_slots
            self.service_time[winners] = (
                done * sc.slot_period - self.activation_time[winners]
            )
            loser_pos = np.flatnonzero(res.outcome != SlotResolution.WIN)
            if len(loser_pos):
                losers = contenders[loser_pos]
                loser_outcome = res.outcome[loser_pos]
                self.attempts[losers] += 1
                if sc.retry_cap is not None:
                    still = self.attempts[losers] <= sc.retry_cap
                    phase[losers[~still]] = Phase.DROPPED
                    losers = losers[still]
                    loser_outcome = loser_outcome[still]
                if len(losers):
                    # back-off reference: CR losers learn at MSG3 time, the
                    # rest only at the MSG4 timeout
                    base = np.where(
                        loser_outcome == SlotResolution.LOSE_CRS,
                        sc.msg1_to_msg3_slots,
                        sc.msg1_to_msg3_slots + sc.msg3_to_msg4_slots,
                    )
                    delays = self.rngs["backoff"].integers(
                        1, sc.backoff_window + 1, len(losers)
                    )
                    eligible[losers] = slot + base + delays
                    phase[losers] = Phase.BACKING_OFF
            events = SlotEvents(
                slot=slot,
                contenders=len(contenders),
                activated=res.activated,
                successes=res.successes,
                collisions=res.collisions,
            )
        else:
            events = SlotEvents(slot, 0, 0, 0, 0)

        self.resources_spent += (
            sc.resources.msg1_cost + self._grant_cost * events.activated
        )
        arrivals_next = (
            expected_arrivals_per_slot(sc.traffic, sc.slot_period, slot + 1)
            if self._estimating
            else 0.0
        )
        self.controller.end_slot(
            SlotObservation(
                idle=self.M - events.activated,
                success=events.successes,
                collided=events.activated - events.successes,
            ),
            arrivals_next,
        )
        self.trace.append(events)
        return events

    def run(self) -> RunMetrics:
        slot = 0
        while bool((self.phase <= Phase.BACKING_OFF).any()):
            if slot >= self.scenario.horizon_slots:
                raise HorizonExceeded(
                    f"backlog not drained after {slot} slots "
                    f"(horizon {self.scenario.horizon_slots})"
                )
            self.step(slot)
            slot += 1
        return RunMetrics(
            class_names=self.class_names,
            ue_class=self.ue_class.copy(),
            service_times=self.service_time.copy(),
            attempts=self.attempts.copy(),
            connected=int((self.phase == Phase.CONNECTED).sum()),
            dropped=int((self.phase == Phase.DROPPED).sum()),
            slots=slot,
            resources_spent=self.resources_spent,
            trace=tuple(self.trace),
        )


def run(scenario: Scenario) -> RunMetrics:
    """Simulate one scenario to completion."""
    return Simulation(scenario).run()


def replicate(scenario: Scenario, replications: int) -> list[RunMetrics]:
    """Independent repetitions: same scenario, per-replication derived
    seeds."""
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    out = []
    for rep in range(replications):
        out.append(run(replace(scenario, replicate_index=rep)))
    return out
