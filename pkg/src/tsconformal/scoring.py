"""Score functions with memory L and training algorithms for the split setting.

A memory-L score maps the current point and its L predecessors (most recent
first) to a real number.  ``batch`` evaluates the score series
S_{L+1}..S_m for many series at once; subclasses override it when a
vectorized form exists.
"""

from __future__ import annotations

from typing import Callable, Protocol, Sequence

import numpy as np

from .processes import DataPoint, RegressionFunction, TimeSeries


class ScoreFunction:
    memory: int = 0

    def score(self, z: DataPoint, context: Sequence[DataPoint] = ()) -> float:
        raise NotImplementedError

    def __call__(self, z: DataPoint, context: Sequence[DataPoint] = ()) -> float:
        if len(context) != self.memory:
            raise ValueError(f"expected {self.memory} context points, got {len(context)}")
        return self.score(DataPoint(*z), tuple(DataPoint(*c) for c in context))

    def batch(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Scores at positions L+1..m for each row of (X, Y); shape (B, m - L)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        L = self.memory
        B, m = X.shape
        out = np.empty((B, m - L))
        for b in range(B):
            pts = [DataPoint(X[b, i], Y[b, i]) for i in range(m)]
            for i in range(L, m):
                out[b, i - L] = self.score(pts[i], tuple(pts[i - 1 :: -1][:L]) if L else ())
        return out


class FunctionScore(ScoreFunction):
    """Wrap ``fn(z, context) -> float``."""

    def __init__(self, fn: Callable[[DataPoint, tuple], float], memory: int = 0):
        if memory < 0:
            raise ValueError("memory must be nonnegative")
        self.fn = fn
        self.memory = memory

    def score(self, z, context=()):
        return float(self.fn(z, context))


class ResidualScore(ScoreFunction):
    """|y - f_hat(x; context)|.  Subclasses supply ``predict``."""

    def predict(self, x: float, context: Sequence[DataPoint] = ()) -> float:
        raise NotImplementedError

    def score(self, z, context=()):
        return abs(z.y - self.predict(z.x, context))


class PretrainedResidual(ResidualScore):
    memory = 0

    def __init__(self, f: RegressionFunction):
        self.f = f

    def predict(self, x, context=()):
        return float(self.f(np.asarray([x], dtype=float))[0])

    def batch(self, X, Y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.abs(np.atleast_2d(Y) - self.f(X))


def residual_score_pretrained(f: RegressionFunction) -> PretrainedResidual:
    return PretrainedResidual(f)


class ARResidualScore(ResidualScore):
    """Residual of the linear predictor c0 + c1*x + sum_l c_{l+1} * y_{-l}."""

    def __init__(self, coef: np.ndarray, memory: int):
        coef = np.asarray(coef, dtype=float).ravel()
        if coef.size != memory + 2:
            raise ValueError("need memory + 2 coefficients")
        coef.setflags(write=False)
        self.coef = coef
        self.memory = memory

    def predict(self, x, context=()):
        lags = [c.y for c in context]
        return float(self.coef[0] + self.coef[1] * x + np.dot(self.coef[2:], lags))

    def batch(self, X, Y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        return np.abs(Y[:, self.memory :] - ar_predict_batch(X, Y, self.coef[None, :], self.memory))


class RankScore(ScoreFunction):
    """s(z_k) = k for listed points, 0 elsewhere."""

    memory = 0

    def __init__(self, z_points: Sequence[tuple[float, float]]):
        pts = [tuple(map(float, p)) for p in z_points]
        if len(set(pts)) != len(pts):
            raise ValueError("rank_score points must be distinct")
        self.z_points = tuple(pts)
        self._lookup = {p: k for k, p in enumerate(pts)}
        self._canonical = all(p == (k, k) for k, p in enumerate(pts))

    def score(self, z, context=()):
        return float(self._lookup.get((float(z.x), float(z.y)), 0))

    def batch(self, X, Y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if self._canonical:
            K = len(self.z_points)
            hit = (X == Y) & (X >= 0) & (X < K) & (X == np.floor(X))
            return np.where(hit, X, 0.0)
        return super().batch(X, Y)


def rank_score(z_points: Sequence[tuple[float, float]]) -> RankScore:
    return RankScore(z_points)


def score_series(s: ScoreFunction, ts: TimeSeries, from_index: int) -> np.ndarray:
    """(S_from..S_{n+1}) with S_i = s(Z_i; Z_{i-1}..Z_{i-L}); indices are 1-based."""
    L = s.memory
    if from_index <= L:
        raise ValueError(f"insufficient context: from_index={from_index} needs > L={L}")
    if from_index > len(ts):
        raise ValueError(f"from_index={from_index} beyond series length {len(ts)}")
    start = from_index - 1 - L
    window = ts[start:]
    return s.batch(window.x[None, :], window.y[None, :])[0]


# --------------------------------------------------------------------------
# training algorithms


class TrainingAlgorithm(Protocol):
    memory: int

    def fit(self, block: TimeSeries) -> ScoreFunction: ...


def ar_design(X: np.ndarray, Y: np.ndarray, L: int) -> np.ndarray:
    """Rows [1, x_i, y_{i-1}, .., y_{i-L}] for i = L+1..m; X, Y of shape (B, m)."""
    B, m = X.shape
    cols = [np.ones((B, m - L)), X[:, L:]]
    cols += [Y[:, L - l : m - l] for l in range(1, L + 1)]
    return np.stack(cols, axis=-1)


def ar_predict_batch(X: np.ndarray, Y: np.ndarray, coef: np.ndarray, L: int) -> np.ndarray:
    return np.einsum("bip,bp->bi", ar_design(X, Y, L), coef)


def fit_ar_coef(X: np.ndarray, Y: np.ndarray, L: int) -> np.ndarray:
    """Minimum-norm least-squares AR coefficients for each row block; shape (B, L+2)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] < L + 2:
        raise ValueError(f"training block too short: n0={X.shape[1]} < L+2={L + 2}")
    D = ar_design(X, Y, L)
    return np.einsum("bpi,bi->bp", np.linalg.pinv(D), Y[:, L:])


def fit_ar_residual_score(L: int, block: TimeSeries) -> ARResidualScore:
    if L < 0:
        raise ValueError("memory must be nonnegative")
    if len(block) < L + 2:
        raise ValueError(f"training block too short: n0={len(block)} < L+2={L + 2}")
    D = ar_design(block.x[None, :], block.y[None, :], L)[0]
    coef, *_ = np.linalg.lstsq(D, block.y[L:], rcond=None)
    return ARResidualScore(coef, L)


class LeastSquaresAR:
    """Order-L linear autoregression on (x, lagged y); scores are absolute residuals."""

    def __init__(self, memory: int = 0):
        if memory < 0:
            raise ValueError("memory must be nonnegative")
        self.memory = memory

    def fit(self, block: TimeSeries) -> ARResidualScore:
        return fit_ar_residual_score(self.memory, block)

    def split_scores_batch(self, X: np.ndarray, Y: np.ndarray, n0: int) -> np.ndarray:
        """Fit on columns [:n0] of every row, return S_{n0+L+1}..S_m per row."""
        L = self.memory
        coef = fit_ar_coef(X[:, :n0], Y[:, :n0], L)
        Xw, Yw = X[:, n0:], Y[:, n0:]
        return np.abs(Yw[:, L:] - ar_predict_batch(Xw, Yw, coef, L))

    def __repr__(self):
        return f"LeastSquaresAR(memory={self.memory})"


class FrequencyScore(ScoreFunction):
    """Finite-valued score: rarity of y in the training block, plus context mismatches."""

    def __init__(self, counts: dict[float, int], n_train: int, memory: int):
        self.counts = dict(counts)
        self.n_train = n_train
        self.memory = memory

    def score(self, z, context=()):
        rarity = self.n_train - self.counts.get(float(z.y), 0)
        mismatch = sum(1 for c in context if c.y != z.y)
        return float(rarity) + mismatch / (2 * self.memory) if self.memory else float(rarity)


class FrequencyAlgorithm:
    """Training algorithm for finite-alphabet data whose scores take finitely many values."""

    def __init__(self, memory: int = 0):
        if memory < 0:
            raise ValueError("memory must be nonnegative")
        self.memory = memory

    def fit(self, block: TimeSeries) -> FrequencyScore:
        values, counts = np.unique(block.y, return_counts=True)
        return FrequencyScore(dict(zip(values.tolist(), counts.tolist())), len(block), self.memory)

    def split_scores_batch(self, X, Y, n0):
        out = []
        for xr, yr in zip(X, Y):
            s = self.fit(TimeSeries(xr[:n0], yr[:n0]))
            out.append(s.batch(xr[None, n0:], yr[None, n0:])[0])
        return np.array(out)

    def __repr__(self):
        return f"FrequencyAlgorithm(memory={self.memory})"
