"""Slot-outcome counting kernels: compiled extension when the build made
one, vectorized numpy otherwise.  Both implementations take identical
pre-drawn arrays and return identical per-trial success counts, so the
choice never changes results, only speed."""

from __future__ import annotations

from . import pure

count_successes_pure = pure.count_successes

try:
    from ._countdown_cy import count_successes as count_successes_compiled

    COMPILED = True
    count_successes = count_successes_compiled
except ImportError:  # extension not built; numpy path
    COMPILED = False
    count_successes_compiled = None
    count_successes = count_successes_pure

IMPLEMENTATION = "compiled" if COMPILED else "pure"

__all__ = [
    "COMPILED",
    "IMPLEMENTATION",
    "count_successes",
    "count_successes_pure",
    "count_successes_compiled",
]
