"""Pacing criterion: percentile thresholds over confidence scores.

The percentile is nearest-rank (no interpolation), so the threshold is
always an observed score and selection depends only on score ranks.
Selection is strict-above at interior rounds; the final round (percentile
0) admits ties with the minimum so the whole pool enters and the loop can
terminate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class PacingError(ValueError):
    """Invalid schedule or scores."""


def percentile(scores, rank: float) -> float:
    """Nearest-rank percentile: sorted[ceil(rank/100 * n) - 1], clamped to the data.

    rank=0 returns the minimum, rank=100 the maximum; the result is always an
    element of `scores`.
    """
    values = np.asarray(scores, dtype=np.float64)
    if values.size == 0:
        raise PacingError("percentile of empty scores")
    if not np.isfinite(values).all():
        raise PacingError("scores must be finite")
    if not 0.0 <= rank <= 100.0:
        raise PacingError(f"percentile rank must be in [0, 100], got {rank}")
    n = values.size
    idx = math.ceil(rank / 100.0 * n) - 1
    idx = min(max(idx, 0), n - 1)
    return float(np.sort(values, kind="stable")[idx])


def schedule_percentiles(delta: float) -> list[float]:
    """Decreasing sequence 100-delta, 100-2*delta, ... with a final 0 entry."""
    if not 0.0 < delta <= 100.0:
        raise PacingError(f"delta must be in (0, 100], got {delta}")
    seq = []
    k = 1
    while True:
        t = 100.0 - k * delta
        if t <= 1e-9:
            break
        seq.append(t)
        k += 1
    seq.append(0.0)
    return seq


@dataclass(frozen=True)
class PacingSchedule:
    """Either a decreasing percentile curriculum or a fixed-threshold baseline."""

    mode: str = "percentile"          # "percentile" | "fixed"
    delta: float = 20.0
    fixed_threshold: float = 0.0
    rounds: int = 5                   # round budget, fixed mode only

    def __post_init__(self):
        if self.mode not in ("percentile", "fixed"):
            raise PacingError(f"mode must be 'percentile' or 'fixed', got {self.mode!r}")
        if self.mode == "percentile":
            schedule_percentiles(self.delta)  # validates delta
        else:
            if not 0.0 <= self.fixed_threshold < 1.0:
                raise PacingError("fixed threshold must be in [0, 1)")
            if self.rounds < 1:
                raise PacingError("rounds must be >= 1")

    @property
    def percentiles(self) -> list[float]:
        if self.mode != "percentile":
            raise PacingError("fixed schedules have no percentile sequence")
        return schedule_percentiles(self.delta)

    @property
    def n_rounds(self) -> int:
        return len(self.percentiles) if self.mode == "percentile" else self.rounds


@dataclass(frozen=True)
class ConfidenceScores:
    """Per-sample confidence, aligned arrays in unlabeled-pool order."""

    sample_ids: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.sample_ids, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if ids.shape != values.shape or ids.ndim != 1:
            raise PacingError("sample_ids and values must be aligned 1-D arrays")
        if values.size and not ((values > 0.0).all() and (values <= 1.0).all()):
            raise PacingError("confidence values must lie in (0, 1]")
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


def select(scores: ConfidenceScores, top_percentile: float) -> tuple[np.ndarray, float]:
    """Ids scoring above the top_percentile-th percentile of the full pool.

    Strict > at interior rounds; at percentile 0 the rule is >= so every
    sample is selected (required for termination). Returns (ids, threshold);
    ids keep pool order.
    """
    if len(scores) == 0:
        raise PacingError("cannot select from empty scores")
    threshold = percentile(scores.values, top_percentile)
    if top_percentile == 0.0:
        mask = scores.values >= threshold
    else:
        mask = scores.values > threshold
    return scores.sample_ids[mask], threshold


def select_fixed(scores: ConfidenceScores, threshold: float) -> np.ndarray:
    """Ids scoring strictly above a fixed threshold; 0.0 selects everything."""
    if not 0.0 <= threshold < 1.0:
        raise PacingError("fixed threshold must be in [0, 1)")
    return scores.sample_ids[scores.values > threshold]
