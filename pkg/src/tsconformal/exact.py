"""Exact coverage on finite-alphabet processes by enumerating every sequence."""

from __future__ import annotations

from typing import Literal

import numpy as np

from . import processes as P
from .quantile import conformal_level, order_index, quantile
from .simulate import exact_cover_probability

Method = Literal["event", "rank"]


def _scores(joint: P.FiniteDistribution, spec, scorer, mode: str, n0: int | None) -> np.ndarray:
    X, Y = spec.embed(joint.outcomes)
    if mode == "split":
        return scorer.split_scores_batch(X, Y, n0)
    return scorer.batch(X, Y)


def _event_probability(scores: np.ndarray, level: float, jitter: bool) -> float:
    """Coverage of one score vector computed through the quantile itself.

    With jitter, tied scores are put in a total order (ties ranked by a
    tiny offset) and the test point's position among its ties is averaged
    over, each position being equally likely.
    """
    cal, test = scores[:-1], scores[-1]
    if not jitter:
        return float(test <= quantile(cal, level))
    tied = np.flatnonzero(cal == test)
    e = tied.size
    if e == 0:
        return float(test <= quantile(cal, level))
    # rank positions 0..e inside the tie group, scaled below the score gap
    gaps = np.diff(np.unique(scores))
    h = (gaps.min() if gaps.size else 1.0) / (4 * (e + 1))
    hits = 0
    for pos in range(e + 1):
        shifted = cal.astype(float).copy()
        # tied calibration scores take the other e slots in order
        slots = [j for j in range(e + 1) if j != pos]
        shifted[tied] = test + h * np.asarray(slots, dtype=float)
        hits += test + h * pos <= quantile(shifted, level)
    return hits / (e + 1)


def run_exact_coverage(
    spec: P.FiniteMarkovSpec | P.CyclicMixtureSpec,
    scorer,
    alpha: float,
    mode: str = "pretrained",
    n0: int | None = None,
    jitter: bool = False,
    method: Method = "rank",
) -> float:
    """P(Y_{n+1} in C) summed exactly over the joint pmf of Z_1..Z_{n+1}.

    ``scorer`` is a ScoreFunction in pretrained mode and a training
    algorithm with ``split_scores_batch`` in split mode.  ``method="rank"``
    uses the order-count identity; ``method="event"`` evaluates the
    quantile threshold directly.  The two paths must agree.
    """
    n = spec.n
    L = scorer.memory
    if mode == "split":
        n0 = n // 2 if n0 is None else n0
        if not 1 <= n0 < n:
            raise ValueError(f"split point n0={n0} must satisfy 1 <= n0 < n={n}")
        m_cal = n - n0 - L
    elif mode == "pretrained":
        m_cal = n - L
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if m_cal < 1:
        raise ValueError("calibration block too short")
    joint = P.joint_pmf(spec)
    scores = np.asarray(_scores(joint, spec, scorer, mode, n0), dtype=float)
    level = conformal_level(alpha, m_cal)

    if method == "rank":
        r = order_index(level, m_cal)
        cal, test = scores[:, :-1], scores[:, -1:]
        below = (cal < test).sum(axis=1)
        if jitter:
            cover = exact_cover_probability(below, (cal == test).sum(axis=1), r)
        else:
            cover = (below < r).astype(float)
    elif method == "event":
        cover = np.array([_event_probability(row, level, jitter) for row in scores])
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(np.dot(joint.probs, cover))
