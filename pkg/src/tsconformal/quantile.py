"""Order-statistic quantiles and the conformal level correction."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

# Levels are products like (1 - alpha) * (m + 1) / m; values of b*m within this
# distance of an integer are snapped to it before taking the ceiling.
_SNAP = 1e-9


class EmptyScoresError(ValueError):
    pass


def as_score_vector(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate and return scores as a 1-D float array."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyScoresError("empty score list")
    if not np.all(np.isfinite(v)):
        raise ValueError("scores must be finite")
    return v


def order_index(b: float, m: int) -> int:
    """Return ceil(b*m), the 1-based rank selected by level ``b`` in a list of length ``m``.

    Returns ``m + 1`` for b > 1 and 0 for b <= 0; callers map these to +inf / -inf.
    """
    if b <= 0:
        return 0
    bm = b * m
    nearest = round(bm)
    if abs(bm - nearest) <= _SNAP * max(1.0, abs(bm)):
        bm = float(nearest)
    if bm > m:
        return m + 1
    return max(1, math.ceil(bm))


def quantile(v: Sequence[float] | np.ndarray, b: float) -> float:
    """The ceil(b*m)-th smallest entry of ``v``; +inf if b > 1, -inf if b <= 0.

    >>> quantile([3, 1, 2], 0.5)
    2.0
    """
    v = as_score_vector(v)
    m = v.size
    r = order_index(b, m)
    if r == 0:
        return -math.inf
    if r > m:
        return math.inf
    return float(np.partition(v, r - 1)[r - 1])


def conformal_level(alpha: float, m_cal: int) -> float:
    """Corrected quantile level (1 - alpha)(1 + 1/m_cal)."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if m_cal < 1:
        raise ValueError("m_cal must be a positive integer")
    return (1 - alpha) * (m_cal + 1) / m_cal


def rank_threshold(alpha: float, m_cal: int) -> int:
    """Rank r such that a test score is covered iff fewer than r calibration scores are strictly smaller.

    r = m_cal + 1 means always covered (level above 1).
    """
    return order_index(conformal_level(alpha, m_cal), m_cal)
