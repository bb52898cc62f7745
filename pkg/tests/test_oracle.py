"""Monte Carlo and exhaustive slot oracles.

These oracles work from the protocol definition only; the tests here pin
them to hand-computed exact values and to each other.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from bccrsim import kernels
from bccrsim.analytics import BccrConfig, SlotLoad, expected_success
from bccrsim.oracle import (
    exhaustive_slot,
    mc_slot,
    mc_slot_engine,
    sample_slot,
    validate_grid,
    validate_point,
)


def test_exhaustive_hand_computed_values() -> None:
    # two UEs, one preamble, two levels: recovered iff priorities differ
    assert exhaustive_slot(SlotLoad(2, 1), BccrConfig(levels=2)) == Fraction(1, 2)
    # two UEs, two preambles, no countdown: collide half the time
    assert exhaustive_slot(SlotLoad(2, 2)) == Fraction(1)
    # adding two levels recovers half the collisions: 1 + 1/2 * 1/2
    assert exhaustive_slot(SlotLoad(2, 2), BccrConfig(levels=2)) == Fraction(5, 4)


def test_exhaustive_empty_slot() -> None:
    assert exhaustive_slot(SlotLoad(0, 3)) == Fraction(0)


def test_exhaustive_matches_closed_form_without_countdown() -> None:
    for n, m in ((1, 3), (2, 3), (3, 3), (4, 2), (3, 5)):
        exact = exhaustive_slot(SlotLoad(n, m))
        assert float(exact) == pytest.approx(
            expected_success(SlotLoad(n, m)), rel=1e-12
        )


def test_engine_and_min_unique_rule_agree_exactly() -> None:
    # the broadcast engine and the min-unique shortcut are the same rule
    for m in (1, 2, 3):
        for levels in (1, 2, 3, 4):
            cfg = BccrConfig(levels=levels)
            for n in range(0, 4):
                load = SlotLoad(n, m)
                assert exhaustive_slot(load, cfg) == exhaustive_slot(
                    load, cfg, engine=True
                )


def test_mc_slot_agrees_with_exhaustive() -> None:
    load, cfg = SlotLoad(4, 3), BccrConfig(levels=2)
    exact = float(exhaustive_slot(load, cfg))
    est = mc_slot(load, cfg, trials=20_000, rng=123)
    assert est.trials == 20_000
    assert abs(est.mean - exact) <= 4 * max(est.stderr, 1e-9)


def test_mc_slot_engine_agrees_with_exhaustive() -> None:
    load, cfg = SlotLoad(3, 2), BccrConfig(levels=4)
    exact = float(exhaustive_slot(load, cfg))
    est = mc_slot_engine(load, cfg, trials=3_000, rng=321)
    assert abs(est.mean - exact) <= 4 * max(est.stderr, 1e-9)


def test_mc_slot_and_engine_estimate_the_same_quantity() -> None:
    load, cfg = SlotLoad(12, 6), BccrConfig(levels=4)
    fast = mc_slot(load, cfg, trials=20_000, rng=7)
    slow = mc_slot_engine(load, cfg, trials=4_000, rng=8)
    sigma = (fast.stderr**2 + slow.stderr**2) ** 0.5
    assert abs(fast.mean - slow.mean) <= 4 * sigma


def test_mc_slot_is_deterministic_for_a_given_seed() -> None:
    load, cfg = SlotLoad(10, 5), BccrConfig(levels=2)
    first = mc_slot(load, cfg, trials=4_096, rng=55)
    second = mc_slot(load, cfg, trials=4_096, rng=55)
    assert first.mean == second.mean
    assert first.stderr == second.stderr
    # chunk size changes how the stream is consumed, not what is estimated
    pieces = mc_slot(load, cfg, trials=4_096, rng=55, chunk=97)
    sigma = (first.stderr**2 + pieces.stderr**2) ** 0.5
    assert abs(first.mean - pieces.mean) <= 4 * sigma


def test_mc_slot_input_validation() -> None:
    with pytest.raises(ValueError):
        mc_slot(SlotLoad(2, 2), None, trials=0, rng=1)
    with pytest.raises(ValueError):
        mc_slot(SlotLoad(2, 2), None, trials=10, rng=1, chunk=0)
    with pytest.raises(ValueError):
        mc_slot_engine(SlotLoad(2, 2), None, trials=0, rng=1)


def test_sample_slot_count_invariants() -> None:
    rng = np.random.default_rng(17)
    for _ in range(200):
        n = int(rng.integers(0, 40))
        m = int(rng.integers(1, 12))
        levels = int(rng.integers(1, 9))
        cfg = BccrConfig(levels=levels) if levels > 1 else None
        r = sample_slot(SlotLoad(n, m), cfg, rng)
        singles = r.singleton_preambles(m)
        assert singles >= 0
        assert r.idle + r.collided_preambles + singles == m
        assert singles <= r.successes <= singles + r.collided_preambles
        assert r.successes <= min(n, m)
        if n == 0:
            assert r.idle == m and r.successes == 0


def test_sample_slot_without_countdown_successes_are_singletons() -> None:
    rng = np.random.default_rng(29)
    for _ in range(100):
        n = int(rng.integers(0, 30))
        m = int(rng.integers(1, 10))
        r = sample_slot(SlotLoad(n, m), None, rng)
        assert r.successes == r.singleton_preambles(m)


def test_kernel_implementations_match_exactly() -> None:
    assert kernels.IMPLEMENTATION in ("compiled", "pure")
    if not kernels.COMPILED:
        pytest.skip("compiled extension not built")
    rng = np.random.default_rng(31)
    for levels in (1, 2, 4, 16):
        choices = rng.integers(0, 30, size=(500, 25), dtype=np.int32)
        priorities = (
            rng.integers(0, levels, size=(500, 25), dtype=np.int32)
            if levels > 1
            else None
        )
        fast = kernels.count_successes_compiled(choices, priorities, 30, levels)
        slow = kernels.count_successes_pure(choices, priorities, 30, levels)
        assert np.array_equal(np.asarray(fast), np.asarray(slow))


def test_validate_point_passes_at_reference_load() -> None:
    report = validate_point(SlotLoad(50, 30), levels=2, trials=30_000, seed=2)
    assert report.passed
    assert report.error <= 0.03
    assert report.predicted_ratio == pytest.approx(0.3145058326542641, rel=1e-12)
    assert 0.25 <= report.observed_ratio <= 0.40


def test_validate_grid_order_and_reproducibility() -> None:
    reports = validate_grid(ns=[5, 10], crs_counts=[0, 1], trials=2_000, seed=9)
    assert [(r.load.n, r.levels) for r in reports] == [
        (5, 1),
        (10, 1),
        (5, 2),
        (10, 2),
    ]
    again = validate_grid(ns=[5, 10], crs_counts=[0, 1], trials=2_000, seed=9)
    assert [r.observed_ratio for r in again] == [r.observed_ratio for r in reports]


def test_validate_grid_point_streams_do_not_depend_on_grid_shape() -> None:
    wide = validate_grid(ns=[5, 10, 20], crs_counts=[1], trials=1_000, seed=4)
    narrow = validate_grid(ns=[10], crs_counts=[1], trials=1_000, seed=4)
    wide_10 = next(r for r in wide if r.load.n == 10)
    assert wide_10.observed_ratio == narrow[0].observed_ratio


def test_validate_grid_rejects_bad_workers() -> None:
    with pytest.raises(ValueError):
        validate_grid(ns=[5], crs_counts=[0], trials=10, workers=0)
