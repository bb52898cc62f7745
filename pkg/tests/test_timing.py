"""Micro-slot feasibility against propagation geometry."""

from __future__ import annotations

import pytest

from bccrsim.timing import (
    TimingConfig,
    is_feasible,
    is_feasible_worst_case,
    max_hearing_distance,
)


def test_hearing_distance_reference_points() -> None:
    assert max_hearing_distance(TimingConfig()) == pytest.approx(
        999.3833, abs=1e-9
    )
    assert max_hearing_distance(
        TimingConfig(broadcast_fraction=0.8)
    ) == pytest.approx(1998.7666, abs=1e-9)
    # spending the whole micro-slot broadcasting leaves no guard time
    assert max_hearing_distance(TimingConfig(broadcast_fraction=1.0)) == 0.0


def test_hearing_distance_is_the_feasibility_boundary() -> None:
    cfg = TimingConfig()
    d = max_hearing_distance(cfg)
    assert is_feasible_worst_case(cfg, d * (1 - 1e-9))
    assert not is_feasible_worst_case(cfg, d * (1 + 1e-9))


def test_worst_case_matches_radial_geometry() -> None:
    cfg = TimingConfig()
    for d12 in (0.0, 100.0, 999.0, 1000.0, 2500.0):
        assert is_feasible_worst_case(cfg, d12) == is_feasible(cfg, 0.0, d12, d12)


def test_kilometre_pair_is_just_out_of_reach() -> None:
    assert not is_feasible(TimingConfig(), 0.0, 1000.0, 1000.0)


def test_colocated_pair_is_feasible() -> None:
    assert is_feasible(TimingConfig(), 500.0, 500.0, 0.0)


def test_offset_uses_absolute_difference() -> None:
    cfg = TimingConfig()
    assert is_feasible(cfg, 100.0, 400.0, 300.0) == is_feasible(
        cfg, 400.0, 100.0, 300.0
    )


def test_negative_distances_rejected() -> None:
    with pytest.raises(ValueError):
        is_feasible(TimingConfig(), -1.0, 10.0, 10.0)
    with pytest.raises(ValueError):
        is_feasible_worst_case(TimingConfig(), -5.0)


def test_config_validation() -> None:
    with pytest.raises(ValueError):
        TimingConfig(t_crs=0.0)
    with pytest.raises(ValueError):
        TimingConfig(broadcast_fraction=0.0)
    with pytest.raises(ValueError):
        TimingConfig(broadcast_fraction=1.5)
    with pytest.raises(ValueError):
        TimingConfig(wave_speed=-1.0)
