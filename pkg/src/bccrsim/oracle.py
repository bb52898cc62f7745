"""Single-slot Monte Carlo and exhaustive enumeration cross-checks.

Everything in this module works from the protocol definition alone: a
singleton preamble succeeds, and a collided preamble is recovered iff the
strongest (numerically smallest) priority drawn on it is unique.  None of
the closed forms from :mod:`bccrsim.analytics` are used to produce the
estimates, which is what makes the comparison in :func:`validate_grid`
meaningful.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from bccrsim import kernels
from bccrsim.analytics import BccrConfig, SlotLoad, analyze_slot
from bccrsim.bccr import resolve_contention

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]

# Chunked trial generation keeps peak memory at chunk * n int32s instead of
# trials * n.
_CHUNK = 1 << 15


@dataclass(frozen=True)
class SlotTrialResult:
    """Outcome counts for one simulated PRACH slot.

    With ``M`` preambles, ``idle + collided_preambles`` plus the number of
    singleton preambles equals ``M``.  ``successes`` counts singletons plus
    any collided preambles recovered by countdown resolution, so it can
    exceed the singleton count but never ``M``.
    """

    successes: int
    idle: int
    collided_preambles: int

    def singleton_preambles(self, preambles: int) -> int:
        return preambles - self.idle - self.collided_preambles


@dataclass(frozen=True)
class McEstimate:
    """Sample mean of per-trial successes with its standard error."""

    mean: float
    stderr: float
    trials: int


def _as_generator(rng: SeedLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _levels(cfg: Optional[BccrConfig]) -> int:
    return 1 if cfg is None else cfg.levels


def sample_slot(
    load: SlotLoad, cfg: Optional[BccrConfig], rng: SeedLike
) -> SlotTrialResult:
    """Simulate one slot and return the full outcome breakdown.

    Slow path used by property tests; :func:`mc_slot` is the bulk
    estimator.
    """
    gen = _as_generator(rng)
    n, m = load.n, load.preambles
    levels = _levels(cfg)
    choices = gen.integers(0, m, size=n)
    priorities = gen.integers(0, levels, size=n) if levels > 1 else None

    per_preamble: dict[int, list[int]] = defaultdict(list)
    for idx, choice in enumerate(choices):
        per_preamble[int(choice)].append(idx)

    successes = 0
    collided = 0
    for members in per_preamble.values():
        if len(members) == 1:
            successes += 1
            continue
        collided += 1
        if priorities is not None:
            drawn = [int(priorities[i]) for i in members]
            if drawn.count(min(drawn)) == 1:
                successes += 1
    return SlotTrialResult(
        successes=successes,
        idle=m - len(per_preamble),
        collided_preambles=collided,
    )


def mc_slot(
    load: SlotLoad,
    cfg: Optional[BccrConfig],
    trials: int,
    rng: SeedLike,
    *,
    chunk: int = _CHUNK,
) -> McEstimate:
    """Monte Carlo estimate of expected successes in one slot.

    Each trial: ``n`` UEs pick uniform preambles; singletons succeed; with
    ``cfg``, each collided preamble's UEs draw uniform priorities over
    ``cfg.levels`` and the preamble is recovered iff the minimum is unique.
    Returns the sample mean with its standard error.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if chunk < 1:
        raise ValueError("chunk must be >= 1")
    gen = _as_generator(rng)
    n, m = load.n, load.preambles
    levels = _levels(cfg)

    total = 0
    total_sq = 0
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        choices = gen.integers(0, m, size=(size, n), dtype=np.int32)
        priorities = (
            gen.integers(0, levels, size=(size, n), dtype=np.int32)
            if levels > 1
            else None
        )
        counts = kernels.count_successes(choices, priorities, m, levels)
        total += int(counts.sum())
        total_sq += int((counts * counts).sum())
        done += size

    mean = total / trials
    if trials == 1:
        stderr = 0.0
    else:
        var = (total_sq - trials * mean * mean) / (trials - 1)
        stderr = math.sqrt(max(var, 0.0) / trials)
    return McEstimate(mean=mean, stderr=stderr, trials=trials)


def mc_slot_engine(
    load: SlotLoad,
    cfg: Optional[BccrConfig],
    trials: int,
    rng: SeedLike,
) -> McEstimate:
    """Like :func:`mc_slot` but resolving collisions through the micro-slot
    broadcast engine instead of the min-unique shortcut.

    Orders of magnitude slower; exists purely to cross-validate the
    shortcut.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    gen = _as_generator(rng)
    n, m = load.n, load.preambles
    levels = _levels(cfg)
    crs = cfg.crs_count if cfg is not None else 0

    total = 0
    total_sq = 0
    for _ in range(trials):
        choices = gen.integers(0, m, size=n)
        priorities = gen.integers(0, levels, size=n) if levels > 1 else None
        per_preamble: dict[int, list[int]] = defaultdict(list)
        for idx, choice in enumerate(choices):
            per_preamble[int(choice)].append(idx)
        successes = 0
        for members in per_preamble.values():
            if len(members) == 1:
                successes += 1
            elif priorities is not None:
                drawn = [int(priorities[i]) for i in members]
                outcome = resolve_contention(drawn, crs)
                if outcome.winner is not None:
                    successes += 1
        total += successes
        total_sq += successes * successes

    mean = total / trials
    if trials == 1:
        stderr = 0.0
    else:
        var = (total_sq - trials * mean * mean) / (trials - 1)
        stderr = math.sqrt(max(var, 0.0) / trials)
    return McEstimate(mean=mean, stderr=stderr, trials=trials)


def exhaustive_slot(
    load: SlotLoad,
    cfg: Optional[BccrConfig] = None,
    *,
    engine: bool = False,
) -> Fraction:
    """Exact expectation of per-slot successes by full enumeration.

    Enumerates all ``M**n * l**n`` equally likely (preamble, priority)
    assignments with rational arithmetic.  ``engine=True`` resolves each
    collided preamble through :func:`bccrsim.bccr.resolve_contention`
    instead of the min-unique rule; the two must agree exactly.

    Intended for tiny instances (cost grows as ``(M*l)**n``).
    """
    n, m = load.n, load.preambles
    levels = _levels(cfg)
    crs = cfg.crs_count if cfg is not None else 0
    if n == 0:
        return Fraction(0)

    total = 0
    for choices in itertools.product(range(m), repeat=n):
        groups: dict[int, list[int]] = defaultdict(list)
        for idx, choice in enumerate(choices):
            groups[choice].append(idx)
        singles = sum(1 for members in groups.values() if len(members) == 1)
        collided = [members for members in groups.values() if len(members) > 1]

        if levels == 1 or not collided:
            total += singles * levels**n
            continue

        for priorities in itertools.product(range(levels), repeat=n):
            successes = singles
            for members in collided:
                drawn = [priorities[i] for i in members]
                if engine:
                    if resolve_contention(drawn, crs).winner is not None:
                        successes += 1
                elif drawn.count(min(drawn)) == 1:
                    successes += 1
            total += successes

    return Fraction(total, m**n * levels**n)


@dataclass(frozen=True)
class PointReport:
    """Closed-form vs Monte Carlo comparison at one (n, levels) point."""

    load: SlotLoad
    levels: int
    trials: int
    predicted_ratio: float
    observed_ratio: float
    stderr_ratio: float
    tolerance: float

    @property
    def error(self) -> float:
        return abs(self.predicted_ratio - self.observed_ratio)

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance


def validate_point(
    load: SlotLoad,
    levels: int,
    trials: int,
    seed: SeedLike,
    tolerance: float = 0.03,
) -> PointReport:
    """Compare the closed-form success ratio against the oracle at one
    grid point.  The closed form plugs the expected collision size into
    the resolution probability, so a small systematic error is expected;
    ``tolerance`` is absolute in success-ratio units."""
    cfg = BccrConfig(levels=levels) if levels > 1 else None
    predicted = analyze_slot(load, cfg).success_bccr / load.n
    estimate = mc_slot(load, cfg, trials, seed)
    return PointReport(
        load=load,
        levels=levels,
        trials=trials,
        predicted_ratio=predicted,
        observed_ratio=estimate.mean / load.n,
        stderr_ratio=estimate.stderr / load.n,
        tolerance=tolerance,
    )


def _validate_point_packed(
    args: tuple[int, int, int, int, int, float]
) -> PointReport:
    n, preambles, levels, trials, seed, tolerance = args
    # Keyed sub-stream: reproducible per point, independent of grid order.
    seq = np.random.SeedSequence(seed, spawn_key=(n, levels))
    return validate_point(
        SlotLoad(n=n, preambles=preambles), levels, trials, seq, tolerance
    )


def validate_grid(
    ns: Sequence[int],
    crs_counts: Sequence[int],
    preambles: int = 30,
    trials: int = 10**5,
    seed: int = 0,
    tolerance: float = 0.03,
    workers: int = 1,
) -> list[PointReport]:
    """Run :func:`validate_point` over a grid of loads and CRS depths.

    ``crs_counts`` entries are micro-slot counts ``k`` (``0`` means no
    countdown, i.e. a single priority level).  Results come back in grid
    order regardless of worker scheduling.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = [
        (n, preambles, 2**k if k > 0 else 1, trials, seed, tolerance)
        for k in crs_counts
        for n in ns
    ]
    if workers == 1:
        return [_validate_point_packed(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_validate_point_packed, jobs, chunksize=8))
