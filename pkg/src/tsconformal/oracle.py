"""Slow reference computations over explicit dictionaries.

Pure-Python enumeration with no shared code beyond the process specs: laws
are dicts from tuples to probabilities, subvectors are built by exclusion,
and coverage sorts each calibration list.  Used to cross-check the
vectorized paths.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from typing import Callable, Sequence

from .processes import CyclicMixtureSpec, FiniteMarkovSpec

Law = dict[tuple, float]


def joint_law(spec: FiniteMarkovSpec | CyclicMixtureSpec) -> Law:
    m = spec.n + 1
    law: Law = {}
    if isinstance(spec, FiniteMarkovSpec):
        T = spec.transition.tolist()
        p0 = spec.initial.tolist()
        for seq in itertools.product(range(len(p0)), repeat=m):
            p = p0[seq[0]]
            for a, b in zip(seq, seq[1:]):
                p *= T[a][b]
            if p > 0:
                law[seq] = p
        return law
    K, w = spec.K, spec.b / 4
    for seq in itertools.product(range(K), repeat=m):
        cyclic = all((seq[i + 1] - seq[i]) % K == 1 for i in range(m - 1))
        law[seq] = (1 - w) / K**m + (w / K if cyclic else 0.0)
    return law


def marginal(law: Law, positions: Sequence[int]) -> Law:
    """Law of the entries at 1-based ``positions``."""
    out: Law = defaultdict(float)
    for seq, p in law.items():
        out[tuple(seq[i - 1] for i in positions)] += p
    return dict(out)


def pushforward(law: Law, fn: Callable[[tuple], tuple]) -> Law:
    out: Law = defaultdict(float)
    for seq, p in law.items():
        out[tuple(fn(seq))] += p
    return dict(out)


def tv(p: Law, q: Law) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(x, 0.0) - q.get(x, 0.0)) for x in keys)


def positions_kept(m: int, k: int, tau: int, j: int) -> list[int]:
    """1-based positions of the two deletion subvectors of a length-m vector."""
    if k + tau < m:
        if j == 0:
            dropped = set(range(m - k - tau + 1, m - k + 1))
            return [i for i in range(1, m + 1) if i not in dropped]
        return list(range(k + tau + 1, m + 1)) + list(range(1, k + 1))
    if j == 0:
        return list(range(tau + 1, m + 1))
    return list(range(k - (m - tau) + 1, k + 1))


def psi(law: Law, k: int, tau: int) -> float:
    m = len(next(iter(law)))
    return tv(marginal(law, positions_kept(m, k, tau, 0)), marginal(law, positions_kept(m, k, tau, 1)))


def psi_bar(law: Law, tau: int) -> float:
    m = len(next(iter(law)))
    return sum(psi(law, k, tau) for k in range(1, m + 1)) / m


def beta(law: Law, tau: int) -> float:
    m = len(next(iter(law)))
    best = 0.0
    for k in range(1, m - tau):
        left = list(range(1, k + 1))
        right = list(range(k + tau + 1, m + 1))
        pl, pr = marginal(law, left), marginal(law, right)
        joint = marginal(law, left + right)
        prod = {a + b: pa * pb for a, pa in pl.items() for b, pb in pr.items()}
        best = max(best, tv(joint, prod))
    return best


def coverage(law: Law, scores_of: Callable[[tuple], Sequence[float]], alpha: float, jitter: bool = False) -> float:
    """Coverage probability with the last score as the test score.

    The threshold is the ceil(level * m)-th smallest calibration score with
    level = (1 - alpha)(m + 1)/m.  With jitter, the test point's rank among
    its tied calibration scores is uniform.
    """
    total = 0.0
    for seq, p in law.items():
        s = list(scores_of(seq))
        cal, test = s[:-1], s[-1]
        m = len(cal)
        r = math.ceil((1 - alpha) * (m + 1) - 1e-9)
        if r > m:
            total += p
            continue
        if not jitter:
            total += p * (test <= sorted(cal)[r - 1])
            continue
        below = sum(c < test for c in cal)
        ties = sum(c == test for c in cal)
        covered_slots = sum(1 for pos in range(ties + 1) if below + pos < r)
        total += p * covered_slots / (ties + 1)
    return total
