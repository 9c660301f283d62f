import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tsconformal.quantile import (
    EmptyScoresError,
    as_score_vector,
    conformal_level,
    order_index,
    quantile,
    rank_threshold,
)

scores = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=40)
distinct = st.lists(st.integers(-10_000, 10_000), min_size=1, max_size=40, unique=True).map(
    lambda v: [float(x) for x in v]
)


def test_examples():
    assert quantile([3, 1, 2], 0.5) == 2
    assert quantile([3, 1, 2], 1.2) == math.inf
    assert quantile([3, 1, 2], 0) == -math.inf
    assert quantile([5], 1) == 5
    assert quantile([3, 1, 2], 1.0) == 3
    assert quantile([3, 1, 2], -0.5) == -math.inf


def test_empty_and_nonfinite_rejected():
    with pytest.raises(EmptyScoresError, match="empty score list"):
        quantile([], 0.5)
    with pytest.raises(ValueError):
        quantile([1.0, math.nan], 0.5)
    with pytest.raises(ValueError):
        as_score_vector([math.inf])


def test_conformal_level_examples():
    assert conformal_level(0.1, 9) == 1.0
    assert conformal_level(0.1, 19) == pytest.approx(18 / 19, abs=1e-15)
    assert conformal_level(0.5, 1) == 1.0
    with pytest.raises(ValueError):
        conformal_level(0.1, 0)
    with pytest.raises(ValueError):
        conformal_level(1.0, 5)


def test_level_snapping_keeps_integer_ranks():
    # 0.9 * 10 / 9 * 9 is 9.000000000000002 in floating point
    assert order_index(conformal_level(0.1, 9), 9) == 9
    assert rank_threshold(0.1, 9) == 9
    assert order_index(conformal_level(0.1, 8), 8) == 9  # level > 1
    for m in range(1, 200):
        assert rank_threshold(0.1, m) == math.ceil(round(0.9 * (m + 1), 9))


@given(scores, st.lists(st.floats(-0.5, 1.5), min_size=2, max_size=10))
def test_monotone_in_level(v, bs):
    qs = [quantile(v, b) for b in sorted(bs)]
    assert all(a <= b for a, b in zip(qs, qs[1:]))


@given(distinct, st.floats(1e-6, 1.0))
def test_rank_identity(v, b):
    q = quantile(v, b)
    assert sum(x <= q for x in v) == math.ceil(round(b * len(v), 9))


@given(scores, st.floats(0, 1))
def test_lower_count_bound(v, a):
    q = quantile(v, 1 - a)
    assert np.mean(np.asarray(v) <= q) >= 1 - a - 1e-12


@given(distinct, st.floats(0, 0.999))
def test_upper_count_bound(v, a):
    m = len(v)
    q = quantile(v, 1 - a)
    assert np.mean(np.asarray(v) <= q) <= order_index(1 - a, m) / m + 1e-12


@given(scores, st.floats(0.01, 1))
def test_quantile_is_an_entry(v, b):
    assert quantile(v, b) in v


def test_stability_to_deletion_exhaustive():
    a_grid = [round(0.05 * i, 2) for i in range(1, 20)]
    violations = 0
    for m in range(1, 7):
        for cuts in itertools.product((0, 1), repeat=m - 1):
            v = np.concatenate([[0], np.cumsum(cuts)]).astype(float)
            for tau in range(m):
                for drop in itertools.combinations(range(m), tau):
                    keep = np.delete(v, drop)
                    for a in a_grid:
                        lo = quantile(v, (1 - a) * (m - tau) / m)
                        hi = quantile(v, 1 - a * (m - tau) / m)
                        violations += not (lo <= quantile(keep, 1 - a) <= hi)
    assert violations == 0
