import numpy as np
import pytest
from hypothesis import given, strategies as st

from tsconformal.config import lag_match_score
from tsconformal.processes import DataPoint, MAProcessSpec, TimeSeries, sample_ma, sin_2pi
from tsconformal.scoring import (
    FrequencyAlgorithm,
    FunctionScore,
    LeastSquaresAR,
    fit_ar_residual_score,
    rank_score,
    residual_score_pretrained,
    score_series,
)


def series(n=9, t=1, seed=0):
    return sample_ma(MAProcessSpec(t=t, n=n), np.random.default_rng(seed))


def test_residual_score_examples():
    s = residual_score_pretrained(sin_2pi)
    assert s(DataPoint(0.3, sin_2pi(0.3))) == 0
    assert s(DataPoint(0.3, sin_2pi(0.3) + 2)) == pytest.approx(2)
    assert s(DataPoint(0.3, sin_2pi(0.3) - 2)) == pytest.approx(2)


def test_rank_score_examples():
    pts = [(0.0, 1.0), (2.0, 3.0), (4.0, 5.0)]
    s = rank_score(pts)
    assert s(DataPoint(0.0, 1.0)) == 0
    assert s(DataPoint(4.0, 5.0)) == 2
    assert s(DataPoint(9.0, 9.0)) == 0
    with pytest.raises(ValueError):
        rank_score([(0, 0), (0, 0)])
    X = np.array([[0.0, 2.0, 4.0, 7.0]])
    Y = np.array([[1.0, 3.0, 5.0, 7.0]])
    assert s.batch(X, Y).tolist() == [[0, 1, 2, 0]]
    canon = rank_score([(k, k) for k in range(5)])
    assert canon.batch(np.array([[0.0, 3.0, 7.0]]), np.array([[0.0, 3.0, 7.0]])).tolist() == [[0, 3, 0]]


def test_score_series_l0_is_pointwise():
    ts = series()
    s = residual_score_pretrained(sin_2pi)
    got = score_series(s, ts, 1)
    want = [s(z) for z in ts]
    np.testing.assert_allclose(got, want, atol=0)


def test_score_series_memory_and_context_order():
    seen = []

    def fn(z, ctx):
        seen.append((z, ctx))
        return z.y - 10 * ctx[0].y

    s = FunctionScore(fn, memory=1)
    ts = TimeSeries.from_points([(0, 1), (0, 2), (0, 3), (0, 4)])
    out = score_series(s, ts, 2)
    assert out.tolist() == [2 - 10, 3 - 20, 4 - 30]
    two = FunctionScore(lambda z, c: c[0].y * 10 + c[1].y, memory=2)
    # most recent first: context of Z_3 is (Z_2, Z_1)
    assert score_series(two, ts, 3).tolist() == [21, 32]
    assert score_series(FunctionScore(lambda z, c: z.y, memory=3), ts, 4).tolist() == [4]


@given(st.integers(0, 4), st.integers(1, 12))
def test_score_series_length(L, extra):
    n = L + extra
    ts = TimeSeries(np.arange(n + 1.0), np.arange(n + 1.0))
    s = FunctionScore(lambda z, c: z.y, memory=L)
    for start in range(L + 1, n + 2):
        assert len(score_series(s, ts, start)) == n + 2 - start


def test_insufficient_context():
    s = FunctionScore(lambda z, c: 0.0, memory=2)
    with pytest.raises(ValueError, match="insufficient context"):
        score_series(s, series(), 2)
    with pytest.raises(ValueError):
        s(DataPoint(0, 0), ())


def test_ar_fit_exact_on_noiseless_linear_data():
    rng = np.random.default_rng(1)
    x = rng.uniform(size=30)
    y = np.zeros(30)
    y[0] = 1.0
    for i in range(1, 30):
        y[i] = 0.5 + 2 * x[i] - 0.3 * y[i - 1]
    block = TimeSeries(x, y)
    s = fit_ar_residual_score(1, block)
    assert np.max(score_series(s, block, 2)) < 1e-9
    np.testing.assert_allclose(s.coef, [0.5, 2.0, -0.3], atol=1e-9)


def test_ar_l0_is_ordinary_least_squares():
    ts = series(n=40)
    s = fit_ar_residual_score(0, ts)
    slope, intercept = np.polyfit(ts.x, ts.y, 1)
    np.testing.assert_allclose(s.coef, [intercept, slope], atol=1e-10)


def test_ar_rank_deficient_uses_min_norm():
    block = TimeSeries(np.ones(6), np.full(6, 2.0))
    s = fit_ar_residual_score(0, block)
    assert s.predict(1.0) == pytest.approx(2.0)
    np.testing.assert_allclose(s.coef, [1.0, 1.0], atol=1e-12)


def test_ar_too_short():
    with pytest.raises(ValueError, match="training block too short"):
        fit_ar_residual_score(2, series(n=2))


def test_refit_is_deterministic():
    ts = series(n=30)
    a = LeastSquaresAR(2).fit(ts[:15])
    b = LeastSquaresAR(2).fit(TimeSeries(ts.x[:15].copy(), ts.y[:15].copy()))
    np.testing.assert_array_equal(score_series(a, ts, 3), score_series(b, ts, 3))


@pytest.mark.parametrize("algorithm", [LeastSquaresAR(1), FrequencyAlgorithm(1)])
def test_training_reads_only_the_training_block(algorithm):
    ts = series(n=20, seed=5)
    if isinstance(algorithm, FrequencyAlgorithm):
        ts = TimeSeries(np.round(ts.x), np.round(ts.y))
    n0 = 10
    y2 = ts.y.copy()
    y2[n0:] += 100.0
    a = algorithm.fit(ts[:n0])
    b = algorithm.fit(TimeSeries(ts.x, y2)[:n0])
    np.testing.assert_array_equal(score_series(a, ts, n0 + 2), score_series(b, ts, n0 + 2))


@pytest.mark.parametrize("L", [0, 1, 3])
def test_split_batch_matches_per_series_fit(L):
    rng = np.random.default_rng(L)
    spec = MAProcessSpec(t=2, n=30)
    X = rng.uniform(size=(4, 31))
    Y = rng.normal(size=(4, 31))
    alg = LeastSquaresAR(L)
    batch = alg.split_scores_batch(X, Y, 12)
    for b in range(4):
        ts = TimeSeries(X[b], Y[b])
        s = alg.fit(ts[:12])
        np.testing.assert_allclose(batch[b], score_series(s, ts, 12 + L + 1), atol=1e-9)


def test_frequency_score_finite_values():
    ts = TimeSeries.from_states([0, 0, 1, 0, 1, 1, 1])
    s = FrequencyAlgorithm(1).fit(ts[:4])
    # y=0 seen 3 times of 4, y=1 once
    assert s(DataPoint(0, 0), (DataPoint(0, 0),)) == 1
    assert s(DataPoint(1, 1), (DataPoint(0, 0),)) == 3.5
    batch = FrequencyAlgorithm(1).split_scores_batch(ts.x[None], ts.y[None], 4)
    np.testing.assert_array_equal(batch[0], score_series(s, ts, 6))


def test_lag_match_score():
    s = lag_match_score(2)
    z = DataPoint(1.0, 1.0)
    assert s(z, (z, DataPoint(0.0, 0.0))) == 1.5
    ts = TimeSeries.from_states([1, 1, 0, 1])
    np.testing.assert_array_equal(score_series(s, ts, 3), [0.0, 1.5])
