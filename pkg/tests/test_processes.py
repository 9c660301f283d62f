import itertools

import numpy as np
import pytest

from tsconformal import processes as P
from tsconformal.rng import block_rng


def rng(seed=0):
    return np.random.default_rng(seed)


def test_ma_noise_window_and_iid_case():
    W, eps = P.sample_ma_noise(0, 5, rng(), 4)
    assert W.shape == eps.shape == (4, 6)
    np.testing.assert_array_equal(W, eps)


@pytest.mark.parametrize("t", [0, 1, 3])
def test_ma_noise_is_a_window_sum(t):
    W, eps = P.sample_ma_noise(t, 6, rng(t), 3)
    for i in range(7):
        np.testing.assert_allclose(eps[:, i], W[:, i : i + t + 1].sum(axis=1), atol=1e-12)


@pytest.mark.parametrize("t", [0, 2, 4])
def test_ma_variance_and_covariance(t):
    _, eps = P.sample_ma_noise(t, 10, rng(10 + t), 100_000)
    var = eps[:, 5].var()
    assert abs(var / (t + 1) - 1) < 0.02
    for h in range(0, t + 3):
        cov = np.mean(eps[:, 3] * eps[:, 3 + h])
        assert abs(cov - max(0, t + 1 - h)) < 0.05 * (t + 1)


def test_ma_series_shape_and_regression():
    spec = P.MAProcessSpec(t=1, n=7, f=P.zero_function)
    ts = P.sample_ma(spec, rng())
    assert len(ts) == 8 and ts.n == 7
    assert np.all((ts.x >= 0) & (ts.x < 1))
    with pytest.raises(ValueError):
        P.MAProcessSpec(t=-1, n=3)


def test_cyclic_b_zero_is_iid_uniform():
    spec = P.CyclicMixtureSpec(K=5, b=0.0, n=9)
    s = P.sample_cyclic_states(spec, rng(), 200_000)
    # consecutive differences of an iid uniform walk equal 1 w.p. 1/K
    frac = np.mean(np.all((np.diff(s, axis=1) % 5) == 1, axis=1))
    assert frac < 1e-4
    counts = np.bincount(s.ravel(), minlength=5) / s.size
    assert np.all(np.abs(counts - 0.2) < 3 * np.sqrt(0.16 / s.size) + 1e-3)


def test_cyclic_branch_steps_by_one():
    spec = P.CyclicMixtureSpec(K=50, b=1.0, n=6)
    s = P.sample_cyclic_states(spec, rng(2), 40_000)
    cyclic = np.all((np.diff(s, axis=1) % 50) == 1, axis=1)
    assert abs(cyclic.mean() - 0.25) < 0.01
    for i in range(7):
        counts = np.bincount(s[:, i], minlength=50) / len(s)
        assert np.all(np.abs(counts - 0.02) < 4 * np.sqrt(0.02 * 0.98 / len(s)))


def test_cyclic_points_validated():
    with pytest.raises(ValueError):
        P.CyclicMixtureSpec(K=2, b=0.5, n=3, z_points=((0, 0), (0, 0)))
    with pytest.raises(ValueError):
        P.CyclicMixtureSpec(K=2, b=1.5, n=3)
    spec = P.CyclicMixtureSpec(K=2, b=0.5, n=3, z_points=((0, 1), (2, 3)))
    x, y = spec.embed(np.array([1, 0]))
    assert x.tolist() == [2, 0] and y.tolist() == [3, 1]


def test_markov_identity_and_iid_rows():
    ident = P.FiniteMarkovSpec(np.eye(3), [0.2, 0.3, 0.5], 9)
    s = P.sample_markov_states(ident, rng(), 1000)
    assert np.all(s == s[:, :1])
    iid = P.FiniteMarkovSpec([[0.3, 0.7]] * 2, [0.3, 0.7], 4)
    law = P.joint_pmf(iid)
    for seq, p in law.as_dict().items():
        assert p == pytest.approx(np.prod([[0.3, 0.7][a] for a in seq]), abs=1e-15)


def test_markov_transition_frequencies():
    spec = P.two_state_chain(0.9, 100_000 - 1)
    s = P.sample_markov_states(spec, rng(3), 1)[0]
    stay = np.mean(s[1:] == s[:-1])
    assert abs(stay - 0.9) < 3 * np.sqrt(0.09 / len(s))


def test_markov_spec_validation():
    with pytest.raises(ValueError):
        P.FiniteMarkovSpec([[0.5, 0.6], [0.5, 0.5]], [0.5, 0.5], 3)
    with pytest.raises(ValueError):
        P.FiniteMarkovSpec([[0.5, 0.5], [0.5, 0.5]], [0.5, 0.6], 3)
    with pytest.raises(ValueError):
        P.FiniteMarkovSpec([[1.0]], [1.0], 3)


def test_joint_pmf_examples():
    coin = P.joint_pmf(P.FiniteMarkovSpec([[0.5, 0.5]] * 2, [0.5, 0.5], 1))
    assert all(p == pytest.approx(0.25) for p in coin.as_dict().values())
    chain = P.joint_pmf(P.two_state_chain(0.9, 1)).as_dict()
    assert chain[(0, 0)] == pytest.approx(0.45) and chain[(1, 1)] == pytest.approx(0.45)
    assert chain[(0, 1)] == pytest.approx(0.05) and chain[(1, 0)] == pytest.approx(0.05)


def test_cyclic_pmf_matches_brute_force_sum():
    law = P.joint_pmf(P.CyclicMixtureSpec(K=2, b=1.0, n=1)).as_dict()
    want = {(0, 1): 0.3125, (1, 0): 0.3125, (0, 0): 0.1875, (1, 1): 0.1875}
    for seq, p in want.items():
        assert law[seq] == pytest.approx(p, abs=1e-15)
    # independent enumeration over both branches for a larger case
    K, b, m = 3, 0.7, 4
    law = P.joint_pmf(P.CyclicMixtureSpec(K=K, b=b, n=m - 1))
    total = 0.0
    for seq in itertools.product(range(K), repeat=m):
        p = (1 - b / 4) / K**m
        if all((seq[i + 1] - seq[i]) % K == 1 for i in range(m - 1)):
            p += b / 4 / K
        assert law.prob(seq) == pytest.approx(p, abs=1e-15)
        total += p
    assert total == pytest.approx(1, abs=1e-12)


def test_state_space_cap():
    with pytest.raises(ValueError, match="state space too large"):
        P.joint_pmf(P.two_state_chain(0.5, 30))


def _shift_invariant(law, h):
    m = law.length
    ref = law.marginal(list(range(h + 1))).as_dict()
    for i in range(1, m - h):
        other = law.marginal(list(range(i, i + h + 1))).as_dict()
        assert set(other) == set(ref)
        for key in ref:
            assert abs(other[key] - ref[key]) < 1e-12


def test_stationary_chain_marginals_shift_invariant():
    T = np.array([[0.5, 0.3, 0.2], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]])
    spec = P.FiniteMarkovSpec(T, P.stationary_distribution(T), 4)
    law = P.joint_pmf(spec)
    for h in range(3):
        _shift_invariant(law, h)


def test_cyclic_marginals_shift_invariant():
    law = P.joint_pmf(P.CyclicMixtureSpec(K=3, b=0.8, n=4))
    for h in range(3):
        _shift_invariant(law, h)


@pytest.mark.parametrize(
    "spec",
    [P.two_state_chain(0.8, 4), P.CyclicMixtureSpec(K=2, b=1.0, n=5), P.CyclicMixtureSpec(K=4, b=0.6, n=2)],
)
def test_sampler_matches_pmf(spec):
    N = 1_000_000
    s = P.sample_states(spec, block_rng(7, 0), N)
    A, m = spec.alphabet_size, spec.n + 1
    assert A**m <= 64
    codes = np.ravel_multi_index(tuple(s.T), (A,) * m)
    freq = np.bincount(codes, minlength=A**m) / N
    p = P.joint_pmf(spec).dense().ravel()
    sigma = np.sqrt(p * (1 - p) / N)
    assert np.all(np.abs(freq - p) <= 4 * sigma + 1e-9)


def test_finite_distribution_validation_and_aggregation():
    with pytest.raises(ValueError):
        P.FiniteDistribution(np.array([[0], [1]]), np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        P.FiniteDistribution(np.array([[0], [1]]), np.array([-0.1, 1.1]))
    d = P.FiniteDistribution(np.array([[0, 1], [0, 1], [1, 1]]), np.array([0.25, 0.25, 0.5]))
    assert d.as_dict() == {(0, 1): 0.5, (1, 1): 0.5}
    assert d.marginal([1]).as_dict() == {(1,): 1.0}


def test_timeseries_indexing():
    ts = P.TimeSeries.from_points([(0, 1), (2, 3), (4, 5)])
    assert ts.n == 2
    assert ts.point(1) == P.DataPoint(0, 1)
    assert ts[-1] == P.DataPoint(4, 5)
    assert len(ts[1:]) == 2
    assert list(ts)[1] == P.DataPoint(2, 3)
