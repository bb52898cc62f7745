"""Binary-countdown contention resolution over shared micro-slots.

UEs that picked the same preamble each hold a priority p (0 is the
strongest).  The complement 2^k - 1 - p is broadcast bit by bit, most
significant first, over k micro-slots: a UE whose current bit is 1
broadcasts, a UE whose bit is 0 listens.  A listener that hears a
broadcast has lost: it goes silent for the rest of the period.  A UE
holding the unique strongest priority is the last one standing and sends
its MSG3 alone; ties survive together and collide.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "PrioritySequence",
    "ResolutionOutcome",
    "UniformRandomPolicy",
    "ClassBandPolicy",
    "encode_priority",
    "decode_bits",
    "resolve_contention",
    "draw_priority",
    "two_class_bands",
]


@dataclass(frozen=True)
class PrioritySequence:
    """A priority and its k-bit broadcast schedule (MSB first)."""

    priority: int
    bits: tuple[int, ...]


def encode_priority(priority: int, crs_count: int) -> PrioritySequence:
    """Map a priority to its broadcast bits: base-2 of (2^k - 1 - priority),
    MSB first, so that stronger (numerically lower) priorities broadcast
    longer."""
    top = (1 << crs_count) - 1
    if not 0 <= priority <= top:
        raise ValueError(
            f"priority {priority} outside [0, {top}] for {crs_count} micro-slots"
        )
    value = top - priority
    bits = tuple((value >> (crs_count - 1 - j)) & 1 for j in range(crs_count))
    return PrioritySequence(priority=priority, bits=bits)


def decode_bits(bits: Sequence[int]) -> int:
    """Inverse of encode_priority: recover the priority from its bits."""
    k = len(bits)
    value = 0
    for b in bits:
        value = (value << 1) | (b & 1)
    return (1 << k) - 1 - value


@dataclass(frozen=True)
class ResolutionOutcome:
    """Result of one countdown period.

    survivors holds the indices still active after the last micro-slot
    (in input order); loss_slot maps each eliminated index to the
    micro-slot in which it went silent; broadcasts records who
    transmitted in each micro-slot.
    """

    survivors: tuple[int, ...]
    loss_slot: dict[int, int] = field(default_factory=dict)
    broadcasts: tuple[frozenset[int], ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.survivors

    @property
    def winner(self) -> int | None:
        return self.survivors[0] if len(self.survivors) == 1 else None

    @property
    def is_collision(self) -> bool:
        return len(self.survivors) > 1


def resolve_contention(
    priorities: Sequence[int], crs_count: int
) -> ResolutionOutcome:
    """Run the countdown period for the UEs on one preamble.

    priorities are the contenders' priorities in arbitrary order; the
    outcome refers to them by index.
    """
    schedules = [encode_priority(p, crs_count).bits for p in priorities]
    active = list(range(len(priorities)))
    loss_slot: dict[int, int] = {}
    broadcasts: list[frozenset[int]] = []
    for j in range(crs_count):
        talkers = frozenset(i for i in active if schedules[i][j] == 1)
        broadcasts.append(talkers)
        if talkers:
            # every active listener hears at least one broadcast and drops out
            for i in active:
                if i not in talkers:
                    loss_slot[i] = j
            active = [i for i in active if i in talkers]
    return ResolutionOutcome(
        survivors=tuple(active), loss_slot=loss_slot, broadcasts=tuple(broadcasts)
    )


@dataclass(frozen=True)
class UniformRandomPolicy:
    """Every UE draws uniformly over the whole priority alphabet."""

    levels: int

    def __post_init__(self) -> None:
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")

    def band(self, ue_class: str) -> range:
        return range(self.levels)


@dataclass(frozen=True)
class ClassBandPolicy:
    """Each UE class draws uniformly within its own contiguous band of
    levels; lower bands are stronger."""

    bands: Mapping[str, range]

    def __post_init__(self) -> None:
        if not self.bands:
            raise ValueError("at least one class band required")
        for name, band in self.bands.items():
            if len(band) == 0 or band.start < 0 or band.step != 1:
                raise ValueError(f"band for class {name!r} must be a non-empty "
                                 f"ascending range, got {band}")

    @property
    def levels(self) -> int:
        return max(band.stop for band in self.bands.values())

    def band(self, ue_class: str) -> range:
        try:
            return self.bands[ue_class]
        except KeyError:
            raise ValueError(f"unknown UE class {ue_class!r}") from None


def two_class_bands(levels: int) -> ClassBandPolicy:
    """Default split: the prioritized class owns the stronger half of the
    alphabet, everyone else the weaker half."""
    if levels < 2 or levels % 2:
        raise ValueError(f"two-class split needs an even level count, got {levels}")
    half = levels // 2
    return ClassBandPolicy(bands={"prio": range(0, half), "nonprio": range(half, levels)})


def draw_priority(
    policy: UniformRandomPolicy | ClassBandPolicy,
    ue_class: str,
    rng: np.random.Generator,
) -> int:
    """Draw one priority for a UE of the given class."""
    band = policy.band(ue_class)
    return int(rng.integers(band.start, band.stop))
