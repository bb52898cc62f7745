"""Vectorized numpy fallback for the per-trial slot-outcome kernel.

Groups (trial, preamble, priority) triples with one flat bincount and
recovers each group's strongest priority and its multiplicity without
any Python-level loop over trials.
"""

from __future__ import annotations

import numpy as np


def count_successes(
    preambles: np.ndarray,
    priorities: np.ndarray | None,
    n_preambles: int,
    levels: int,
) -> np.ndarray:
    """Successes per trial.

    preambles: (trials, n) int32 draws in [0, n_preambles).
    priorities: matching draws in [0, levels), or None for the baseline.
    A preamble succeeds when exactly one UE picked it, or, with
    priorities, when the lowest priority on it is held uniquely.
    """
    trials, n = preambles.shape
    M = n_preambles
    rows = np.arange(trials, dtype=np.int64)[:, None]
    flat = preambles.astype(np.int64) + rows * M
    if priorities is None or levels <= 1:
        counts = np.bincount(flat.ravel(), minlength=trials * M).reshape(trials, M)
        return (counts == 1).sum(axis=1).astype(np.int64)
    key = flat * levels + priorities
    by_level = np.bincount(key.ravel(), minlength=trials * M * levels)
    by_level = by_level.reshape(trials * M, levels)
    counts = by_level.sum(axis=1)
    strongest = (by_level > 0).argmax(axis=1)
    at_strongest = np.take_along_axis(by_level, strongest[:, None], axis=1)[:, 0]
    resolved = (counts == 1) | ((counts >= 2) & (at_strongest == 1))
    return resolved.reshape(trials, M).sum(axis=1).astype(np.int64)
