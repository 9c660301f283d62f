"""Synthetic time series: MA(t) regression noise, the cyclic mixture, finite Markov chains.

Index conventions: a series of length n+1 holds Z_1..Z_{n+1} at Python
positions 0..n.  Finite-alphabet processes embed state ``a`` as the data point
``(x=a, y=a)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

MAX_CELLS = 10**7

RegressionFunction = Callable[[np.ndarray], np.ndarray]
CovariateLaw = Callable[[np.random.Generator, tuple], np.ndarray]


def sin_2pi(x):
    return np.sin(2 * np.pi * np.asarray(x, dtype=float))


def zero_function(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def identity_function(x):
    return np.asarray(x, dtype=float).copy()


REGRESSION_FUNCTIONS: dict[str, RegressionFunction] = {
    "sin": sin_2pi,
    "zero": zero_function,
    "linear": identity_function,
}


def uniform_covariates(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    return rng.random(shape)


def gaussian_covariates(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    return rng.standard_normal(shape)


COVARIATE_LAWS: dict[str, CovariateLaw] = {
    "uniform": uniform_covariates,
    "gaussian": gaussian_covariates,
}


class DataPoint(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class TimeSeries:
    """Ordered data points held column-wise."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError("x and y must have the same length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_points(cls, points: Sequence[tuple[float, float]]) -> "TimeSeries":
        pts = list(points)
        return cls(np.array([p[0] for p in pts], dtype=float), np.array([p[1] for p in pts], dtype=float))

    @classmethod
    def from_states(cls, states: Sequence[int]) -> "TimeSeries":
        s = np.asarray(states, dtype=float)
        return cls(s, s.copy())

    @property
    def n(self) -> int:
        return len(self) - 1

    def __len__(self) -> int:
        return self.x.size

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return TimeSeries(self.x[idx], self.y[idx])
        return DataPoint(float(self.x[idx]), float(self.y[idx]))

    def __iter__(self) -> Iterator[DataPoint]:
        for i in range(len(self)):
            yield self[i]

    def point(self, i: int) -> DataPoint:
        """Z_i with the 1-based index used throughout the theory."""
        if not 1 <= i <= len(self):
            raise IndexError(f"Z_{i} outside 1..{len(self)}")
        return self[i - 1]


# --------------------------------------------------------------------------
# process specs


@dataclass(frozen=True)
class MAProcessSpec:
    """Y_i = f(X_i) + eps_i with eps_i = W_{i-t} + ... + W_i, W iid N(0, 1)."""

    t: int
    n: int
    f: RegressionFunction = sin_2pi
    covariate_law: CovariateLaw = uniform_covariates

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("MA order t must be nonnegative")
        if self.n < 1:
            raise ValueError("n must be at least 1")


@dataclass(frozen=True)
class CyclicMixtureSpec:
    """Mixture (b/4) P_cyclic + (1 - b/4) Q^{n+1} over K distinct points."""

    K: int
    b: float
    n: int
    z_points: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if not 0 <= self.b <= 1:
            raise ValueError("b must lie in [0, 1]")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.z_points is not None:
            pts = tuple(tuple(map(float, p)) for p in self.z_points)
            if len(pts) != self.K:
                raise ValueError("need exactly K points")
            if len(set(pts)) != len(pts):
                raise ValueError("z_points must be pairwise distinct")
            object.__setattr__(self, "z_points", pts)

    @property
    def alphabet_size(self) -> int:
        return self.K

    def embed(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        states = np.asarray(states)
        if self.z_points is None:
            s = states.astype(float)
            return s, s.copy()
        pts = np.asarray(self.z_points, dtype=float)
        return pts[states, 0], pts[states, 1]


@dataclass(frozen=True)
class FiniteMarkovSpec:
    transition: np.ndarray
    initial: np.ndarray
    n: int

    def __post_init__(self):
        T = np.asarray(self.transition, dtype=float)
        p0 = np.asarray(self.initial, dtype=float).ravel()
        if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] < 2:
            raise ValueError("transition must be a square matrix with at least 2 states")
        if p0.size != T.shape[0]:
            raise ValueError("initial distribution length must match the alphabet")
        if np.any(T < 0) or np.any(np.abs(T.sum(axis=1) - 1) > 1e-12):
            raise ValueError("transition rows must be probability vectors")
        if np.any(p0 < 0) or abs(p0.sum() - 1) > 1e-12:
            raise ValueError("initial distribution must sum to 1")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        T.setflags(write=False)
        p0.setflags(write=False)
        object.__setattr__(self, "transition", T)
        object.__setattr__(self, "initial", p0)

    @property
    def alphabet_size(self) -> int:
        return self.transition.shape[0]

    def embed(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(states, dtype=float)
        return s, s.copy()


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    T = np.asarray(transition, dtype=float)
    A = T.shape[0]
    system = np.vstack([T.T - np.eye(A), np.ones((1, A))])
    rhs = np.zeros(A + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    pi = np.clip(pi, 0, None)
    return pi / pi.sum()


def two_state_chain(stay: float, n: int, initial: Sequence[float] = (0.5, 0.5)) -> FiniteMarkovSpec:
    T = np.array([[stay, 1 - stay], [1 - stay, stay]])
    return FiniteMarkovSpec(T, np.asarray(initial, dtype=float), n)


# --------------------------------------------------------------------------
# samplers


def sample_ma_noise(t: int, n: int, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (W, eps) with W of shape (size, n+1+t) holding W_{1-t}..W_{n+1}."""
    W = rng.standard_normal((size, n + 1 + t))
    if t == 0:
        return W, W.copy()
    c = np.cumsum(W, axis=1)
    eps = c[:, t:].copy()
    eps[:, 1:] -= c[:, : n]
    return W, eps


def sample_ma_batch(spec: MAProcessSpec, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` independent series; returns (X, Y) arrays of shape (size, n+1)."""
    _, eps = sample_ma_noise(spec.t, spec.n, rng, size)
    X = spec.covariate_law(rng, (size, spec.n + 1))
    Y = spec.f(X) + eps
    return X, Y


def sample_ma(spec: MAProcessSpec, rng: np.random.Generator) -> TimeSeries:
    X, Y = sample_ma_batch(spec, rng, 1)
    return TimeSeries(X[0], Y[0])


def sample_cyclic_states(spec: CyclicMixtureSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    m = spec.n + 1
    cyclic = rng.random(size) < spec.b / 4
    start = rng.integers(0, spec.K, size=size)
    iid = rng.integers(0, spec.K, size=(size, m))
    walk = (start[:, None] + np.arange(m)) % spec.K
    return np.where(cyclic[:, None], walk, iid)


def sample_cyclic_mixture(spec: CyclicMixtureSpec, rng: np.random.Generator) -> TimeSeries:
    states = sample_cyclic_states(spec, rng, 1)[0]
    return TimeSeries(*spec.embed(states))


def sample_markov_states(spec: FiniteMarkovSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    m = spec.n + 1
    A = spec.alphabet_size
    cum = np.cumsum(spec.transition, axis=1)
    cum0 = np.cumsum(spec.initial)
    u = rng.random((size, m))
    states = np.empty((size, m), dtype=np.int64)
    states[:, 0] = np.minimum((u[:, 0:1] >= cum0).sum(axis=1), A - 1)
    for i in range(1, m):
        rows = cum[states[:, i - 1]]
        states[:, i] = np.minimum((u[:, i : i + 1] >= rows).sum(axis=1), A - 1)
    return states


def sample_markov(spec: FiniteMarkovSpec, rng: np.random.Generator) -> TimeSeries:
    return TimeSeries.from_states(sample_markov_states(spec, rng, 1)[0])


def sample_states(spec: FiniteMarkovSpec | CyclicMixtureSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    if isinstance(spec, FiniteMarkovSpec):
        return sample_markov_states(spec, rng, size)
    if isinstance(spec, CyclicMixtureSpec):
        return sample_cyclic_states(spec, rng, size)
    raise TypeError(f"not a finite-alphabet process: {type(spec).__name__}")


# --------------------------------------------------------------------------
# exact laws


@dataclass(frozen=True)
class FiniteDistribution:
    """Explicit pmf over length-m sequences.

    ``outcomes`` is an (N, m) array of distinct sequences and ``probs`` their
    masses.  ``alphabet_size`` is set for laws over {0..A-1}^m and ``None`` for
    derived laws (e.g. of score vectors).
    """

    outcomes: np.ndarray
    probs: np.ndarray
    alphabet_size: int | None = None
    _aggregated: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        out = np.asarray(self.outcomes)
        if out.ndim == 1:
            out = out[:, None]
        p = np.asarray(self.probs, dtype=float).ravel()
        if out.ndim != 2 or out.shape[0] != p.size:
            raise ValueError("outcomes must be an (N, m) array matching probs")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        if not self._aggregated:
            out, p = aggregate(out, p)
        object.__setattr__(self, "outcomes", out)
        object.__setattr__(self, "probs", p)

    @property
    def length(self) -> int:
        return self.outcomes.shape[1]

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "FiniteDistribution":
        dense = np.asarray(dense, dtype=float)
        A, m = dense.shape[0], dense.ndim
        outcomes = np.indices(dense.shape).reshape(m, -1).T
        return cls(outcomes, dense.ravel(), alphabet_size=A, _aggregated=True)

    def dense(self) -> np.ndarray:
        if self.alphabet_size is None:
            raise ValueError("dense form requires an alphabet")
        A, m = self.alphabet_size, self.length
        arr = np.zeros((A,) * m)
        arr[tuple(self.outcomes.T.astype(np.int64))] = self.probs
        return arr

    def as_dict(self) -> dict[tuple, float]:
        return {tuple(row.tolist()): float(p) for row, p in zip(self.outcomes, self.probs)}

    def prob(self, seq: Sequence) -> float:
        hit = np.all(self.outcomes == np.asarray(seq), axis=1)
        return float(self.probs[hit].sum())

    def marginal(self, positions: Sequence[int]) -> "FiniteDistribution":
        """Law of the entries at 0-based ``positions`` (in the given order)."""
        cols = np.asarray(positions, dtype=np.int64)
        out, p = aggregate(self.outcomes[:, cols], self.probs)
        return FiniteDistribution(out, p, self.alphabet_size, _aggregated=True)


def aggregate(outcomes: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge duplicate outcome rows, summing their masses."""
    if outcomes.shape[1] == 0:
        return outcomes[:1], np.array([probs.sum()])
    uniq, inverse = np.unique(outcomes, axis=0, return_inverse=True)
    return uniq, np.bincount(inverse.ravel(), weights=probs, minlength=uniq.shape[0])


def _check_cells(A: int, m: int) -> None:
    if m * math.log10(max(A, 1)) > 7 + 1e-12:
        raise ValueError(f"state space too large: {A}^{m} cells exceeds {MAX_CELLS}")


def markov_dense(spec: FiniteMarkovSpec, m: int) -> np.ndarray:
    A = spec.alphabet_size
    _check_cells(A, m)
    p = spec.initial.copy()
    for _ in range(m - 1):
        p = p[..., None] * spec.transition
    return p


def cyclic_dense(spec: CyclicMixtureSpec, m: int) -> np.ndarray:
    K = spec.K
    _check_cells(K, m)
    w = spec.b / 4
    dense = np.full((K,) * m, (1 - w) * float(K) ** (-m))
    for j in range(K):
        idx = tuple((j + i) % K for i in range(m))
        dense[idx] += w / K
    return dense


def joint_pmf(spec: FiniteMarkovSpec | CyclicMixtureSpec, m: int | None = None) -> FiniteDistribution:
    """Exact law of (Z_1..Z_m) as state sequences; m defaults to n+1."""
    m = spec.n + 1 if m is None else m
    if m < 1:
        raise ValueError("length must be positive")
    if isinstance(spec, FiniteMarkovSpec):
        return FiniteDistribution.from_dense(markov_dense(spec, m))
    if isinstance(spec, CyclicMixtureSpec):
        return FiniteDistribution.from_dense(cyclic_dense(spec, m))
    raise TypeError(f"no exact law for {type(spec).__name__}")


def all_sequences(A: int, m: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(A), repeat=m)
