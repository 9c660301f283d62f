"""Deletion operators, switch coefficients and beta-mixing coefficients.

Everything here is exact: laws are explicit pmfs over finite alphabets
(see :class:`~tsconformal.processes.FiniteDistribution`) and total variation
is summed cell by cell.  k and tau follow the 1-based conventions of the
theory; returned index lists are 0-based.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .processes import (
    CyclicMixtureSpec,
    FiniteDistribution,
    FiniteMarkovSpec,
    TimeSeries,
    aggregate,
    joint_pmf,
)
from .scoring import ScoreFunction, TrainingAlgorithm


def _span(a: int, b: int) -> list[int]:
    """0-based indices of the 1-based inclusive range a..b (empty if b < a)."""
    return list(range(a - 1, b))


def deletion_indices(m: int, k: int, tau: int, j: int) -> list[int]:
    if j not in (0, 1):
        raise ValueError("deletion variant j must be 0 or 1")
    if not 1 <= k <= m:
        raise ValueError(f"k={k} outside 1..{m}")
    if not 0 <= tau <= m - 1:
        raise ValueError(f"tau={tau} outside 0..{m - 1}")
    if k <= m - 1 - tau:
        if j == 0:
            return _span(1, m - tau - k) + _span(m - k + 1, m)
        return _span(k + tau + 1, m) + _span(1, k)
    if j == 0:
        return _span(tau + 1, m)
    return _span(k - m + tau + 1, k)


def delete(w: Sequence, k: int, tau: int, j: int):
    """Subvector of ``w`` with tau entries removed (j=0 keeps w_m last, j=1 keeps w_k last)."""
    idx = deletion_indices(len(w), k, tau, j)
    if isinstance(w, np.ndarray):
        return w[idx]
    out = [w[i] for i in idx]
    return tuple(out) if isinstance(w, tuple) else out


def split_deletion_indices(n0: int, n1: int, k: int, tau: int, tau_star: int, j: int) -> list[int]:
    """Indices of the split-setting subvectors on a length n0+n1+1 series."""
    if j not in (0, 1):
        raise ValueError("deletion variant j must be 0 or 1")
    if n0 < 0 or n1 < 1:
        raise ValueError("need n0 >= 0 and n1 >= 1")
    if tau < 0 or tau_star < 0 or tau + tau_star > n1:
        raise ValueError(f"invalid range: tau={tau}, tau_star={tau_star}, n1={n1}")
    n = n0 + n1
    head = _span(1, n0)
    if 1 <= k <= n1 - tau - tau_star:
        if j == 0:
            return head + _span(n0 + tau_star + 1, n + 1 - k - tau) + _span(n + 2 - k, n + 1)
        return head + _span(n0 + tau + tau_star + k + 1, n + 1) + _span(n0 + tau_star + 1, n0 + tau_star + k)
    if n1 - tau - tau_star < k <= n1 + 1 - tau_star:
        if j == 0:
            return head + _span(n0 + tau + tau_star + 1, n + 1)
        return head + _span(n0 + k + tau + 2 * tau_star - n1, n0 + k + tau_star)
    raise ValueError(f"invalid range: k={k} outside 1..{n1 + 1 - tau_star}")


def delete_split(w: Sequence, n0: int, k: int, tau: int, tau_star: int, j: int):
    n1 = len(w) - 1 - n0
    idx = split_deletion_indices(n0, n1, k, tau, tau_star, j)
    if isinstance(w, np.ndarray):
        return w[idx]
    out = [w[i] for i in idx]
    return tuple(out) if isinstance(w, tuple) else out


# --------------------------------------------------------------------------
# total variation and pushforwards


def tv_distance(p: FiniteDistribution, q: FiniteDistribution) -> float:
    if p.length != q.length:
        raise ValueError(f"shape mismatch: lengths {p.length} and {q.length}")
    if p.alphabet_size is not None and q.alphabet_size is not None and p.alphabet_size != q.alphabet_size:
        raise ValueError(f"shape mismatch: alphabets {p.alphabet_size} and {q.alphabet_size}")
    rows = np.concatenate([p.outcomes, q.outcomes]).astype(float)
    _, inverse = np.unique(rows, axis=0, return_inverse=True)
    diff = np.bincount(inverse.ravel(), weights=np.concatenate([p.probs, -q.probs]))
    return float(min(1.0, 0.5 * np.abs(diff).sum()))


def pushforward_distribution(
    joint: FiniteDistribution, fn: Callable[[np.ndarray], np.ndarray]
) -> FiniteDistribution:
    """Law of fn(Z); ``fn`` maps an (N, m) array of outcomes to an (N, m') array."""
    mapped = np.asarray(fn(joint.outcomes))
    if mapped.ndim == 1:
        mapped = mapped[:, None]
    if mapped.shape[0] != joint.outcomes.shape[0]:
        raise ValueError("map must return one row per outcome")
    out, p = aggregate(mapped, joint.probs)
    return FiniteDistribution(out, p, None, _aggregated=True)


def rowwise(fn: Callable[[tuple], Sequence]) -> Callable[[np.ndarray], np.ndarray]:
    """Lift a per-sequence map to the array form taken by :func:`pushforward_distribution`."""

    def mapped(outcomes: np.ndarray) -> np.ndarray:
        return np.array([list(fn(tuple(row.tolist()))) for row in outcomes], dtype=float)

    return mapped


def default_embedding(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(states, dtype=float)
    return s, s.copy()


def score_law(
    joint: FiniteDistribution,
    s: ScoreFunction,
    embed: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] = default_embedding,
) -> FiniteDistribution:
    """Law of (S_{L+1}..S_m) induced by a finite-valued score."""
    if joint.length <= s.memory:
        raise ValueError("series shorter than the score memory")
    return pushforward_distribution(joint, lambda out: s.batch(*embed(out)))


def split_score_law(
    joint: FiniteDistribution,
    algorithm: TrainingAlgorithm,
    n0: int,
    tau_star: int = 0,
    embed: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] = default_embedding,
) -> FiniteDistribution:
    """Law of S_split,tau* = (S_{n0+L+tau*+1}..S_{n+1}) with s fit on Z_1..Z_{n0}."""
    L = algorithm.memory
    m = joint.length
    if n0 + L + tau_star + 1 > m:
        raise ValueError("calibration block too short")

    def scores(outcomes: np.ndarray) -> np.ndarray:
        X, Y = embed(outcomes)
        rows = []
        for xr, yr in zip(X, Y):
            fitted = algorithm.fit(TimeSeries(xr[:n0], yr[:n0]))
            rows.append(fitted.batch(xr[None, n0:], yr[None, n0:])[0][tau_star:])
        return np.array(rows)

    return pushforward_distribution(joint, scores)


# --------------------------------------------------------------------------
# coefficients


def psi_k_tau(joint: FiniteDistribution, k: int, tau: int) -> float:
    """Switch coefficient: TV between the laws of the two deletion subvectors."""
    m = joint.length
    return tv_distance(
        joint.marginal(deletion_indices(m, k, tau, 0)),
        joint.marginal(deletion_indices(m, k, tau, 1)),
    )


def psi_column(joint: FiniteDistribution, tau: int) -> np.ndarray:
    return np.array([psi_k_tau(joint, k, tau) for k in range(1, joint.length + 1)])


def psi_bar(column: Sequence[float] | Mapping[int, float], length: int | None = None) -> float:
    """Mean of Psi_{k,tau} over k = 1..n+1."""
    if isinstance(column, Mapping):
        size = length if length is not None else max(column, default=0)
        missing = [k for k in range(1, size + 1) if k not in column]
        if missing or size == 0:
            raise ValueError(f"incomplete column: missing k={missing}")
        values = [column[k] for k in range(1, size + 1)]
    else:
        values = list(column)
        if length is not None and len(values) != length:
            raise ValueError(f"incomplete column: {len(values)} of {length} entries")
        if not values:
            raise ValueError("incomplete column: no entries")
    return float(np.mean(values))


def product_law(left: FiniteDistribution, right: FiniteDistribution) -> FiniteDistribution:
    na, nb = left.probs.size, right.probs.size
    out = np.concatenate(
        [np.repeat(left.outcomes, nb, axis=0), np.tile(right.outcomes, (na, 1))], axis=1
    )
    probs = np.outer(left.probs, right.probs).ravel()
    alphabet = left.alphabet_size if left.alphabet_size == right.alphabet_size else None
    return FiniteDistribution(out, probs, alphabet, _aggregated=True)


def beta_mixing_at(joint: FiniteDistribution, k: int, tau: int) -> float:
    """TV between (Z_1..Z_k, Z_{k+tau+1}..Z_{n+1}) and the product of the two blocks."""
    m = joint.length
    left, right = list(range(k)), list(range(k + tau, m))
    together = joint.marginal(left + right)
    return tv_distance(together, product_law(joint.marginal(left), joint.marginal(right)))


def beta_mixing(joint: FiniteDistribution, tau: int) -> float:
    """max over k in 1..n-tau; beta(n) = 0 by convention (no admissible k)."""
    n = joint.length - 1
    if not 0 <= tau <= n:
        raise ValueError(f"tau={tau} outside 0..{n}")
    if tau == n:
        return 0.0
    return max(beta_mixing_at(joint, k, tau) for k in range(1, n - tau + 1))


def split_switch_tv(joint: FiniteDistribution, n0: int, k: int, tau: int, tau_star: int) -> float:
    """TV between the two split-setting subvectors of Z."""
    n1 = joint.length - 1 - n0
    return tv_distance(
        joint.marginal(split_deletion_indices(n0, n1, k, tau, tau_star, 0)),
        joint.marginal(split_deletion_indices(n0, n1, k, tau, tau_star, 1)),
    )


def cyclic_beta_bound(b: float) -> float:
    """Upper bound 1 - (1 - b/4)^2 on every beta(tau) of the cyclic mixture."""
    return 1 - (1 - b / 4) ** 2


def ma_beta(t: int, tau: int, conservative: bool = False) -> float:
    """beta(tau) for MA(t) data with iid covariates.

    Blocks separated by a gap of tau >= t share no innovations, so beta = 0
    there; smaller gaps get the trivial bound 1.  ``conservative`` moves the
    cutoff to tau >= t + 1.
    """
    if t < 0 or tau < 0:
        raise ValueError("t and tau must be nonnegative")
    return 0.0 if tau >= t + int(conservative) else 1.0


# --------------------------------------------------------------------------
# tables


@dataclass
class CoefficientTable:
    n: int
    psi: dict[tuple[int, int], float] = field(default_factory=dict)
    psi_bar: dict[int, float] = field(default_factory=dict)
    beta: dict[int, float] = field(default_factory=dict)
    provenance: str = "exact"
    beta_bound: dict[int, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "provenance": self.provenance,
            "psi": [{"k": k, "tau": t, "psi": v} for (k, t), v in sorted(self.psi.items(), key=lambda kv: (kv[0][1], kv[0][0]))],
            "psi_bar": [{"tau": t, "psi_bar": v} for t, v in sorted(self.psi_bar.items())],
            "beta": [{"tau": t, "beta": v} for t, v in sorted(self.beta.items())],
            "beta_bound": [{"tau": t, "beta_bound": v} for t, v in sorted(self.beta_bound.items())],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def psi_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "tau", "psi"])
        for (k, t), v in sorted(self.psi.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            w.writerow([k, t, repr(v)])
        return buf.getvalue()

    def beta_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "beta", "psi_bar"])
        for t in sorted(set(self.beta) | set(self.psi_bar)):
            w.writerow([t, repr(self.beta.get(t, "")), repr(self.psi_bar.get(t, ""))])
        return buf.getvalue()


def switch_table(joint: FiniteDistribution, taus: Sequence[int] | None = None, with_beta: bool = True) -> CoefficientTable:
    """Exact Psi_{k,tau}, their averages and beta(tau) for a finite law of length n+1."""
    m = joint.length
    taus = range(m) if taus is None else taus
    table = CoefficientTable(n=m - 1, provenance="exact")
    for tau in taus:
        col = psi_column(joint, tau)
        for k, v in enumerate(col, start=1):
            table.psi[(k, tau)] = float(v)
        table.psi_bar[tau] = psi_bar(col)
        if with_beta:
            table.beta[tau] = beta_mixing(joint, tau)
    return table


def ma_beta_table(t: int, n: int, conservative: bool = False) -> CoefficientTable:
    table = CoefficientTable(n=n, provenance="analytic")
    table.beta = {tau: ma_beta(t, tau, conservative) for tau in range(n + 1)}
    cut = t + int(conservative)
    table.notes.append(f"beta(tau) = 0 for tau >= {cut} is exact; 1 below is the trivial bound")
    return table


def cyclic_table(spec: CyclicMixtureSpec, exact: bool | None = None) -> CoefficientTable:
    """Analytic beta bound for the cyclic mixture, with exact values when the law is small."""
    m = spec.n + 1
    if exact is None:
        exact = spec.K**m <= 10**5
    table = switch_table(joint_pmf(spec), with_beta=True) if exact else CoefficientTable(n=spec.n, provenance="analytic")
    table.beta_bound = {tau: cyclic_beta_bound(spec.b) for tau in range(m)}
    return table


def markov_table(spec: FiniteMarkovSpec, taus: Sequence[int] | None = None) -> CoefficientTable:
    return switch_table(joint_pmf(spec), taus)
