"""Closed-form model of one multichannel random-access slot.

All quantities are per-slot expectations for n UEs drawing uniformly
among M preambles.  A preamble picked by exactly one UE succeeds; a
preamble picked by two or more collides.  With binary countdown enabled,
each collided preamble is additionally resolved with probability
``contention_resolution_probability`` evaluated at the mean collision
size, yielding one extra success per resolved preamble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SlotLoad",
    "BccrConfig",
    "ResourceModel",
    "AnalyticBreakdown",
    "expected_success",
    "expected_idle_preambles",
    "expected_collision_size",
    "contention_resolution_probability",
    "expected_success_bccr",
    "analyze_slot",
    "effective_throughput",
    "throughput_gain",
]

# Denominators smaller than this are treated as exactly degenerate.
_EPS = 1e-12


@dataclass(frozen=True)
class SlotLoad:
    """Contention offered to a single slot: n UEs over M preambles."""

    n: int
    preambles: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if self.preambles < 1:
            raise ValueError(f"preambles must be >= 1, got {self.preambles}")


@dataclass(frozen=True)
class BccrConfig:
    """Countdown configuration: l priority levels resolved in k = ceil(log2 l)
    broadcast micro-slots, each costing ``crs_cost`` resource blocks."""

    levels: int
    crs_cost: float = 0.08

    def __post_init__(self) -> None:
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.crs_cost < 0:
            raise ValueError(f"crs_cost must be >= 0, got {self.crs_cost}")

    @property
    def crs_count(self) -> int:
        """Number of countdown micro-slots needed to encode all levels."""
        return (self.levels - 1).bit_length()

    @classmethod
    def from_crs_count(cls, k: int, crs_cost: float = 0.08) -> "BccrConfig":
        if k < 0:
            raise ValueError(f"crs count must be >= 0, got {k}")
        return cls(levels=2**k, crs_cost=crs_cost)


@dataclass(frozen=True)
class ResourceModel:
    """Resource-block budget: msg1_cost for the preamble slot itself and
    msg3_cost per activated preamble granted an uplink opportunity."""

    msg1_cost: float = 6.0
    msg3_cost: float = 2.0

    def __post_init__(self) -> None:
        if self.msg1_cost <= 0:
            raise ValueError(f"msg1_cost must be > 0, got {self.msg1_cost}")
        if self.msg3_cost <= 0:
            raise ValueError(f"msg3_cost must be > 0, got {self.msg3_cost}")


@dataclass(frozen=True)
class AnalyticBreakdown:
    """One slot's expectations, with and without countdown resolution."""

    load: SlotLoad
    success_base: float
    idle_preambles: float
    collided_preambles: float
    collision_size: float | None
    resolution_probability: float
    success_bccr: float

    @property
    def success_ratio_base(self) -> float:
        return self.success_base / self.load.n if self.load.n else 0.0

    @property
    def success_ratio_bccr(self) -> float:
        return self.success_bccr / self.load.n if self.load.n else 0.0


def _miss_pow(preambles: int, exponent: int | float) -> float:
    """(1 - 1/M)^e via exp of log1p; stable for very large exponents."""
    if exponent == 0:
        return 1.0
    if preambles == 1:
        return 0.0
    return math.exp(exponent * math.log1p(-1.0 / preambles))


def expected_success(load: SlotLoad) -> float:
    """Expected number of UEs alone on their preamble (decoded MSG3s
    without countdown)."""
    if load.n == 0:
        return 0.0
    return load.n * _miss_pow(load.preambles, load.n - 1)


def expected_idle_preambles(load: SlotLoad) -> float:
    """Expected number of preambles chosen by nobody."""
    return load.preambles * _miss_pow(load.preambles, load.n)


def _expected_collided_preambles(load: SlotLoad) -> float:
    # Complement of singleton and idle preambles; the three terms sum to M
    # exactly by construction.
    return load.preambles - expected_success(load) - expected_idle_preambles(load)


def expected_collision_size(load: SlotLoad) -> float | None:
    """Mean number of UEs on a collided preamble, or None when the slot has
    no collision mass to average over (n in {0, 1} and near-degenerate
    loads)."""
    collided = _expected_collided_preambles(load)
    if collided <= _EPS:
        return None
    return (load.n - expected_success(load)) / collided


def contention_resolution_probability(collision_size: float, levels: int) -> float:
    """Probability that a collided preamble ends with a unique strongest
    contender, for the given mean collision size and priority alphabet.

    Accepts fractional sizes (the analytic model plugs in a mean).
    """
    if collision_size < 1:
        raise ValueError(f"collision size must be >= 1, got {collision_size}")
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if levels == 1:
        return 0.0
    s, l = collision_size, levels
    return sum((s / l) * (1.0 - (p + 1) / l) ** (s - 1.0) for p in range(l - 1))


def expected_success_bccr(load: SlotLoad, cfg: BccrConfig) -> float:
    """Expected successes with countdown resolution: the baseline singletons
    plus one per collided preamble that resolves."""
    base = expected_success(load)
    if cfg.levels == 1:
        return base
    size = expected_collision_size(load)
    if size is None:
        return base
    collided = _expected_collided_preambles(load)
    return base + collided * contention_resolution_probability(size, cfg.levels)


def analyze_slot(load: SlotLoad, cfg: BccrConfig | None = None) -> AnalyticBreakdown:
    """Evaluate every per-slot expectation at once."""
    base = expected_success(load)
    idle = expected_idle_preambles(load)
    collided = load.preambles - base - idle
    size = expected_collision_size(load)
    if cfg is None or cfg.levels == 1 or size is None:
        p_res = 0.0
        bccr = base
    else:
        p_res = contention_resolution_probability(size, cfg.levels)
        bccr = base + collided * p_res
    return AnalyticBreakdown(
        load=load,
        success_base=base,
        idle_preambles=idle,
        collided_preambles=collided,
        collision_size=size,
        resolution_probability=p_res,
        success_bccr=bccr,
    )


def effective_throughput(
    load: SlotLoad, cfg: BccrConfig | None, resources: ResourceModel
) -> float:
    """Expected successes per resource block spent on the slot.

    Every activated (non-idle) preamble is granted an uplink opportunity,
    so it costs msg3_cost plus, when countdown is on, one CRS period of
    crs_count * crs_cost, charged whether or not the preamble actually
    collided.
    """
    activated = load.preambles - expected_idle_preambles(load)
    if cfg is None or cfg.levels == 1:
        successes = expected_success(load)
        per_preamble = resources.msg3_cost
    else:
        successes = expected_success_bccr(load, cfg)
        per_preamble = cfg.crs_count * cfg.crs_cost + resources.msg3_cost
    return successes / (resources.msg1_cost + per_preamble * activated)


def throughput_gain(
    load: SlotLoad, cfg: BccrConfig, resources: ResourceModel
) -> float:
    """Ratio of countdown throughput to baseline throughput for one slot."""
    if load.n == 0:
        raise ValueError("throughput gain is undefined for an empty slot")
    return effective_throughput(load, cfg, resources) / effective_throughput(
        load, None, resources
    )
