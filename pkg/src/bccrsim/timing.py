"""Feasibility of the countdown micro-slot length against propagation.

A broadcast in one micro-slot must reach every other contender before
that contender samples its own next micro-slot.  With d1/d2 the closest
and furthest contender distances to the base station and d12 their
mutual distance, the micro-slot length t_crs must cover the arrival
offset (d2 - d1)/c, the usable broadcast fraction, and the mutual
propagation d12/c.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["TimingConfig", "is_feasible", "is_feasible_worst_case", "max_hearing_distance"]

_SPEED_OF_LIGHT = 2.998e8  # m/s


@dataclass(frozen=True)
class TimingConfig:
    """Micro-slot length, the fraction of it spent actually broadcasting,
    and the propagation speed."""

    t_crs: float = 66.67e-6
    broadcast_fraction: float = 0.9
    wave_speed: float = _SPEED_OF_LIGHT

    def __post_init__(self) -> None:
        if self.t_crs <= 0:
            raise ValueError(f"t_crs must be > 0, got {self.t_crs}")
        if not 0 < self.broadcast_fraction <= 1:
            raise ValueError(
                f"broadcast_fraction must be in (0, 1], got {self.broadcast_fraction}"
            )
        if self.wave_speed <= 0:
            raise ValueError(f"wave_speed must be > 0, got {self.wave_speed}")


def is_feasible(cfg: TimingConfig, d1: float, d2: float, d12: float) -> bool:
    """True when a micro-slot is long enough for the given geometry.

    The offset term uses |d2 - d1|: hearing must work in both directions,
    so the orientation of the pair cannot help.
    """
    if min(d1, d2, d12) < 0:
        raise ValueError("distances must be >= 0")
    c = cfg.wave_speed
    required = abs(d2 - d1) / c + cfg.broadcast_fraction * cfg.t_crs + d12 / c
    return cfg.t_crs >= required


def is_feasible_worst_case(cfg: TimingConfig, d12: float) -> bool:
    """Feasibility for the worst geometry at mutual distance d12: the pair
    aligned radially so the arrival offset equals d12 as well."""
    return is_feasible(cfg, 0.0, d12, d12)


def max_hearing_distance(cfg: TimingConfig) -> float:
    """Largest mutual distance that stays feasible in the worst geometry:
    c * t_crs * (1 - broadcast_fraction) / 2."""
    return cfg.wave_speed * cfg.t_crs * (1.0 - cfg.broadcast_fraction) / 2.0
