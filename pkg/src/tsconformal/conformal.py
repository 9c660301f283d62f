"""Pretrained and split conformal prediction rules with memory-L scores."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .processes import DataPoint, TimeSeries
from .quantile import conformal_level, quantile
from .scoring import ResidualScore, ScoreFunction, TrainingAlgorithm, score_series

Mode = Literal["pretrained", "split"]


@dataclass(frozen=True)
class PredictionRule:
    """Calibrated threshold plus everything needed to score the next point.

    ``context`` holds Z_n, .., Z_{n-L+1} (most recent first).  The prediction
    set is {y : score_fn((x, y); context) <= threshold}.
    """

    score_fn: ScoreFunction
    threshold: float
    context: tuple[DataPoint, ...]
    alpha: float
    mode: Mode
    m_cal: int
    level: float
    calibration_scores: np.ndarray

    @property
    def memory(self) -> int:
        return self.score_fn.memory


@dataclass(frozen=True)
class CoverageOutcome:
    covered: bool
    test_score: float
    threshold: float


def _context(history: TimeSeries, L: int) -> tuple[DataPoint, ...]:
    n = len(history)
    return tuple(history[n - 1 - l] for l in range(L))


def _rule(s, scores, history, alpha, mode) -> PredictionRule:
    m_cal = scores.size
    level = conformal_level(alpha, m_cal)
    scores = scores.copy()
    scores.setflags(write=False)
    return PredictionRule(
        score_fn=s,
        threshold=quantile(scores, level),
        context=_context(history, s.memory),
        alpha=alpha,
        mode=mode,
        m_cal=m_cal,
        level=level,
        calibration_scores=scores,
    )


def calibrate_pretrained(s: ScoreFunction, history: TimeSeries, alpha: float) -> PredictionRule:
    """Threshold from S_{L+1}..S_n at level (1 - alpha)(1 + 1/(n - L))."""
    n, L = len(history), s.memory
    if n <= L:
        raise ValueError(f"no calibration scores: n={n} <= L={L}")
    return _rule(s, score_series(s, history, L + 1), history, alpha, "pretrained")


def calibrate_split(
    algorithm: TrainingAlgorithm,
    history: TimeSeries,
    n0: int | None = None,
    alpha: float = 0.1,
) -> PredictionRule:
    """Fit on Z_1..Z_{n0}, calibrate on S_{n0+L+1}..S_n at level (1 - alpha)(1 + 1/(n1 - L))."""
    n = len(history)
    n0 = n // 2 if n0 is None else n0
    if not 1 <= n0 < n:
        raise ValueError(f"split point n0={n0} must satisfy 1 <= n0 < n={n}")
    L = algorithm.memory
    if n - n0 <= L:
        raise ValueError(f"calibration block too short: n1={n - n0} <= L={L}")
    s = algorithm.fit(history[:n0])
    return _rule(s, score_series(s, history, n0 + L + 1), history, alpha, "split")


def evaluate_coverage(rule: PredictionRule, test_point: DataPoint | tuple[float, float]) -> CoverageOutcome:
    s = rule.score_fn(DataPoint(*test_point), rule.context)
    return CoverageOutcome(covered=bool(s <= rule.threshold), test_score=s, threshold=rule.threshold)


def interval_from_rule(
    rule: PredictionRule, x: float, context: Sequence[DataPoint] | None = None
) -> tuple[float, float]:
    """[f_hat - q, f_hat + q]; (nan, nan) stands for the empty set when q = -inf."""
    if not isinstance(rule.score_fn, ResidualScore):
        raise TypeError("interval form unavailable: score is not a residual score")
    ctx = rule.context if context is None else tuple(DataPoint(*c) for c in context)
    q = rule.threshold
    if q == -math.inf:
        return (math.nan, math.nan)
    if q == math.inf:
        return (-math.inf, math.inf)
    center = rule.score_fn.predict(x, ctx)
    return (center - q, center + q)
