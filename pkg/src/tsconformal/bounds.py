"""Coverage bounds as pure functions of (alpha, n, L) and coefficient tables.

Each bound is 1 - alpha -/+ a minimum over a lag grid.  The minimizer is
found by exhaustive scan with ties going to the smallest tau, then the
smallest tau_star.  Values are reported as computed, vacuous or not.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

from .quantile import order_index

_TIE = 1e-12

Table = Mapping[int, float] | Sequence[float]


@dataclass
class BoundResult:
    name: str
    kind: str  # "lower" | "upper"
    bound_value: float
    minimizing_tau: int
    minimizing_tau_star: int = -1
    components: list[dict] = field(default_factory=list)

    @property
    def vacuous(self) -> bool:
        return self.bound_value <= 0 if self.kind == "lower" else self.bound_value >= 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["vacuous"] = self.vacuous
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _get(table: Table, tau: int, what: str = "table") -> float:
    try:
        value = table[tau]
    except (KeyError, IndexError):
        raise ValueError(f"incomplete {what}: missing tau={tau}") from None
    if value is None:
        raise ValueError(f"incomplete {what}: missing tau={tau}")
    return float(value)


def _argmin(candidates: Iterable[dict]) -> tuple[dict, list[dict]]:
    rows = list(candidates)
    if not rows:
        raise ValueError("empty grid")
    best = rows[0]
    for row in rows[1:]:
        if row["total"] < best["total"] - _TIE:
            best = row
    return best, rows


def _row(tau: int, tau_star: int, gap: float, coef: float) -> dict:
    return {"tau": tau, "tau_star": tau_star, "gap": gap, "coefficient": coef, "total": gap + coef}


def _lower(name: str, alpha: float, rows: Iterable[dict]) -> BoundResult:
    best, rows = _argmin(rows)
    return BoundResult(name, "lower", 1 - alpha - best["total"], best["tau"], best["tau_star"], rows)


def thm1_lower(alpha: float, n: int, L: int, psi_bar_S: Table) -> BoundResult:
    """1 - alpha - min_tau { tau/(n-L+1) + psibar_tau(S) },  tau in 0..n-L."""
    _check(alpha, n, L)
    m = n - L + 1
    return _lower(
        "thm1_lower", alpha, (_row(tau, -1, tau / m, _get(psi_bar_S, tau)) for tau in range(n - L + 1))
    )


def cor1_lower(alpha: float, n: int, L: int, beta: Table) -> BoundResult:
    """1 - alpha - min_tau { (tau+L)/(n-L+1) + 2 beta(tau) },  tau in 0..n-2L."""
    _check(alpha, n, L)
    if n - 2 * L < 0:
        raise ValueError("need n >= 2L")
    m = n - L + 1
    return _lower(
        "cor1_lower",
        alpha,
        (_row(tau, -1, (tau + L) / m, 2 * _get(beta, tau, "beta table")) for tau in range(n - 2 * L + 1)),
    )


def cor1_lower_psi(alpha: float, n: int, L: int, psi_bar_Z: Table) -> BoundResult:
    """Data-coefficient form: (tau+L)/(n-L+1) + (n+1)/(n-L+1) psibar_tau(Z)."""
    _check(alpha, n, L)
    m = n - L + 1
    return _lower(
        "cor1_lower_psi",
        alpha,
        (_row(tau, -1, (tau + L) / m, (n + 1) / m * _get(psi_bar_Z, tau)) for tau in range(n - 2 * L + 1)),
    )


def thm3_upper(alpha: float, n: int, L: int, psi_bar_S: Table) -> BoundResult:
    """ceil((1-alpha)(n-L+1))/(n-L+1) + min_tau { tau/(n-L+1) + psibar_tau(S) }.

    Valid only when the scores are almost surely distinct; the caller vouches for that.
    """
    _check(alpha, n, L)
    m = n - L + 1
    base = order_index(1 - alpha, m) / m
    best, rows = _argmin(_row(tau, -1, tau / m, _get(psi_bar_S, tau)) for tau in range(n - L + 1))
    return BoundResult("thm3_upper", "upper", base + best["total"], best["tau"], -1, rows)


def _split_columns(table: Mapping[tuple[int, int], float]) -> set[int]:
    return {ts for (_, ts) in table}


def thm4_split_lower(alpha: float, n1: int, L: int, psi_split: Mapping[tuple[int, int], float]) -> BoundResult:
    """1 - alpha - min { (tau + alpha tau*)/(n1-tau*-L+1) + psibar_tau(S_split,tau*) }.

    The grid is tau + tau* <= n1 - L over the tau* columns present in the
    table (keys are (tau, tau_star)); each present column must be complete.
    """
    _check(alpha, n1, L)
    columns = sorted(ts for ts in _split_columns(psi_split) if 0 <= ts <= n1 - L)
    if not columns:
        raise ValueError("incomplete table: no usable tau_star column")

    def rows():
        for tau in range(n1 - L + 1):
            for ts in columns:
                if tau + ts > n1 - L:
                    continue
                if (tau, ts) not in psi_split:
                    raise ValueError(f"incomplete table: missing (tau={tau}, tau_star={ts})")
                yield _row(tau, ts, (tau + alpha * ts) / (n1 - ts - L + 1), float(psi_split[(tau, ts)]))

    return _lower("thm4_split_lower", alpha, rows())


def cor2_split_lower(alpha: float, n1: int, L: int, beta: Table) -> BoundResult:
    """1 - alpha - min { (tau + alpha tau* + L)/(n1-tau*-L+1) + 2beta(tau) + 2beta(tau*) }."""
    _check(alpha, n1, L)
    if n1 - 2 * L < 0:
        raise ValueError("need n1 >= 2L")

    def rows():
        for tau in range(n1 - 2 * L + 1):
            for ts in range(n1 - 2 * L - tau + 1):
                coef = 2 * _get(beta, tau, "beta table") + 2 * _get(beta, ts, "beta table")
                yield _row(tau, ts, (tau + alpha * ts + L) / (n1 - ts - L + 1), coef)

    return _lower("cor2_split_lower", alpha, rows())


def thm2_ceiling(alpha: float, n: int, b: float, K: int) -> float:
    """(1 - b/4)(1 - alpha) + n(n+1)/(2K) for the cyclic-mixture construction."""
    level = (1 - alpha) * (n + 1)
    if abs(level - round(level)) > 1e-9:
        raise ValueError(f"(1 - alpha)(n + 1) = {level} must be an integer")
    if not 0 <= b <= 1:
        raise ValueError("b must lie in [0, 1]")
    if K < 1:
        raise ValueError("K must be positive")
    return (1 - b / 4) * (1 - alpha) + n * (n + 1) / (2 * K)


def score_psi_bar_from_beta(beta: Table, n: int, L: int) -> dict[int, float]:
    """Upper bounds on psibar_tau(S) implied by beta-mixing of a stationary Z.

    Psi_{k,tau}(Z) <= 2 beta(tau) for k <= n - tau and 0 beyond, so
    psibar_tau(Z) <= 2 beta(tau)(n - tau)/(n + 1); memory L shifts the lag by L
    and rescales by (n+1)/(n-L+1).  Lags tau < L get the trivial bound 1.
    """
    out = {}
    m = n - L + 1
    for tau in range(n - L + 1):
        if tau < L:
            out[tau] = 1.0
            continue
        lag = tau - L
        out[tau] = min(1.0, 2 * _get(beta, lag, "beta table") * (n - lag) / m)
    return out


def _check(alpha: float, n: int, L: int) -> None:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if L < 0 or n < L:
        raise ValueError(f"need n >= L >= 0, got n={n}, L={L}")
    if math.isnan(alpha):
        raise ValueError("alpha is nan")
