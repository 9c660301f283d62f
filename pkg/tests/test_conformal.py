import math

import numpy as np
import pytest

from tsconformal.conformal import calibrate_pretrained, calibrate_split, evaluate_coverage, interval_from_rule
from tsconformal.processes import DataPoint, MAProcessSpec, TimeSeries, sample_ma, sin_2pi, zero_function
from tsconformal.quantile import conformal_level, quantile
from tsconformal.scoring import FunctionScore, LeastSquaresAR, rank_score, residual_score_pretrained


def ma_series(n, t=0, seed=0):
    return sample_ma(MAProcessSpec(t=t, n=n), np.random.default_rng(seed))


def test_pretrained_n9_uses_max():
    ts = ma_series(9)
    s = residual_score_pretrained(sin_2pi)
    rule = calibrate_pretrained(s, ts[:9], 0.1)
    assert rule.level == 1.0 and rule.m_cal == 9
    assert rule.threshold == max(abs(ts.y[:9] - sin_2pi(ts.x[:9])))


def test_pretrained_memory_bookkeeping():
    s = FunctionScore(lambda z, c: z.y + c[0].y - c[1].y, memory=2)
    ts = ma_series(10)
    rule = calibrate_pretrained(s, ts[:10], 0.1)
    assert rule.m_cal == 8
    assert rule.level == pytest.approx(0.9 * 9 / 8)
    assert rule.context == (ts[9], ts[8])
    assert rule.threshold == quantile(rule.calibration_scores, conformal_level(0.1, 8))


def test_small_alpha_gives_infinite_threshold():
    rule = calibrate_pretrained(residual_score_pretrained(sin_2pi), ma_series(5)[:5], 0.01)
    assert rule.threshold == math.inf
    assert evaluate_coverage(rule, (0.2, 1e9)).covered
    assert interval_from_rule(rule, 0.5) == (-math.inf, math.inf)


def test_no_calibration_scores():
    s = FunctionScore(lambda z, c: 0.0, memory=3)
    with pytest.raises(ValueError, match="no calibration scores"):
        calibrate_pretrained(s, ma_series(5)[:3], 0.1)


def test_split_bookkeeping():
    ts = ma_series(100)
    rule = calibrate_split(LeastSquaresAR(0), ts[:100], 50, 0.1)
    assert rule.m_cal == 50
    assert rule.level == pytest.approx(0.918)
    assert rule.threshold == np.sort(rule.calibration_scores)[45]
    rule3 = calibrate_split(LeastSquaresAR(3), ts[:100], 50, 0.1)
    assert rule3.m_cal == 47


def test_split_default_and_errors():
    ts = ma_series(20)
    assert calibrate_split(LeastSquaresAR(0), ts[:20]).m_cal == 10
    with pytest.raises(ValueError, match="calibration block too short"):
        calibrate_split(LeastSquaresAR(3), ts[:12], 9, 0.1)
    with pytest.raises(ValueError):
        calibrate_split(LeastSquaresAR(0), ts[:12], 12, 0.1)


def test_split_fit_ignores_calibration_block():
    ts = ma_series(40, t=2, seed=3)
    y2 = ts.y.copy()
    y2[20:40] += 5.0
    a = calibrate_split(LeastSquaresAR(1), ts[:40], 20)
    b = calibrate_split(LeastSquaresAR(1), TimeSeries(ts.x, y2)[:40], 20)
    np.testing.assert_array_equal(a.score_fn.coef, b.score_fn.coef)


def test_evaluate_coverage_extremes_and_interval():
    s = residual_score_pretrained(zero_function)
    rule = calibrate_pretrained(s, TimeSeries.from_points([(0, -1), (0, 0.5), (0, 1)]), 0.5)
    assert interval_from_rule(rule, 0.3) == (-rule.threshold, rule.threshold)
    out = evaluate_coverage(rule, DataPoint(0.3, rule.threshold))
    assert out.covered and out.test_score == rule.threshold
    assert not evaluate_coverage(rule, DataPoint(0.3, rule.threshold + 1e-9)).covered
    empty = rule.__class__(**{**rule.__dict__, "threshold": -math.inf})
    assert not evaluate_coverage(empty, DataPoint(0.0, 0.0)).covered
    lo, hi = interval_from_rule(empty, 0.0)
    assert math.isnan(lo) and math.isnan(hi)
    point = rule.__class__(**{**rule.__dict__, "threshold": 0.0})
    assert interval_from_rule(point, 0.2) == (0.0, 0.0)


def test_interval_unavailable_for_rank_scores():
    rule = calibrate_pretrained(rank_score([(0, 0), (1, 1)]), TimeSeries.from_states([0, 1, 1]), 0.3)
    with pytest.raises(TypeError, match="interval form unavailable"):
        interval_from_rule(rule, 0.0)


def test_interval_matches_coverage_event():
    rng = np.random.default_rng(4)
    ts = ma_series(50, t=1, seed=4)
    rule = calibrate_split(LeastSquaresAR(2), ts[:50], 25, 0.1)
    lo, hi = interval_from_rule(rule, ts.x[50])
    for y in rng.normal(size=200) * 3:
        assert evaluate_coverage(rule, (ts.x[50], y)).covered == (lo <= y <= hi)


def test_rank_threshold_equivalence():
    # covered iff S_{n+1} <= quantile of all n+1 scores at 1 - alpha
    rng = np.random.default_rng(11)
    for _ in range(100_000):
        m = int(rng.integers(1, 15))
        alpha = float(rng.choice([0.05, 0.1, 0.2, 0.3, 0.5]))
        v = rng.normal(size=m + 1)
        q = quantile(v[:m], conformal_level(alpha, m))
        assert (v[m] <= q) == (v[m] <= quantile(v, 1 - alpha))


def test_threshold_monotone_in_alpha():
    ts = ma_series(60, t=2, seed=8)
    s = residual_score_pretrained(sin_2pi)
    qs = [calibrate_pretrained(s, ts[:60], a).threshold for a in (0.02, 0.05, 0.1, 0.2, 0.4)]
    assert all(a >= b for a, b in zip(qs, qs[1:]))


def test_exchangeable_monte_carlo_band():
    rng = np.random.default_rng(12)
    n, trials = 19, 40_000
    v = rng.normal(size=(trials, n + 1))
    s = np.abs(v)
    r = 18  # ceil(0.9 * 20)
    covered = (np.sort(s[:, :n], axis=1)[:, r - 1] >= s[:, n]).mean()
    se = math.sqrt(0.9 * 0.1 / trials)
    assert 0.9 - 3 * se <= covered <= math.ceil(0.9 * (n + 1)) / (n + 1) + 3 * se
