"""Acceptance checks with their pass/fail logic, runnable at full or reduced scale.

Each ``criterion_*`` function returns a :class:`Check`.  ``scale="full"``
uses the trial counts and grids the checks are stated for; ``"quick"``
shrinks them for a smoke run.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bounds as B
from . import dependence as D
from . import oracle as O
from . import processes as P
from .config import ExperimentConfig, build_process, build_score, lag_match_score
from .exact import run_exact_coverage
from .quantile import quantile
from .scoring import FrequencyAlgorithm, rank_score
from .simulate import (
    DEFAULT_NS,
    DEFAULT_TS,
    count_covered,
    measure_deficit,
    run_coverage_sim,
    run_figure1,
    run_thm2_experiment,
    standard_error,
)

TOL = 1e-12


@dataclass
class Check:
    name: str
    passed: bool
    summary: str
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.summary}"

    def to_dict(self) -> dict:
        return asdict(self)


def _timed(fn):
    def run(*args, **kwargs):
        start = time.perf_counter()
        check = fn(*args, **kwargs)
        check.seconds = time.perf_counter() - start
        return check

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# --------------------------------------------------------------------------
# 1: exchangeable sanity


@_timed
def criterion_1(seed: int = 0, scale: str = "full", workers: int = 1) -> Check:
    """MA(0), true-f residual, L=0, alpha=0.1, n=50: coverage in [0.9, 0.9 + 1/51] up to 0.0009."""
    trials = 1_000_000 if scale == "full" else 100_000
    cfg = ExperimentConfig(process={"kind": "ma", "t": 0}, n=50, alpha=0.1, trials=trials, master_seed=seed)
    start = time.perf_counter()
    p = count_covered(cfg, workers) / trials
    elapsed = time.perf_counter() - start
    lo, hi = 0.9 - 0.0009, 0.9 + 1 / 51 + 0.0009
    ok = lo <= p <= hi and elapsed < 60
    return Check(
        "1 exchangeable sanity",
        ok,
        f"coverage {p:.6f} in [{lo:.4f}, {hi:.4f}], {trials} trials in {elapsed:.1f}s",
        {"coverage": p, "trials": trials, "runtime": elapsed, "interval": [lo, hi]},
    )


# --------------------------------------------------------------------------
# 2 and 3: the MA(t) coverage grid against the closed-form bands


def figure1_rows(seed: int, scale: str, workers: int = 1) -> list[dict]:
    trials = 100_000 if scale == "full" else 10_000
    ns = DEFAULT_NS if scale == "full" else (25, 50, 100)
    return run_figure1(DEFAULT_TS, ns, 0.1, trials, seed, "indicator", workers)


@_timed
def criterion_2(seed: int = 0, scale: str = "full", rows: list[dict] | None = None, workers: int = 1) -> Check:
    """Coverage >= 1 - alpha - (t+1)/(n+1) - 3 sigma, and >= the exact-lag cor1_lower value - 3 sigma."""
    rows = figure1_rows(seed, scale, workers) if rows is None else rows
    bad = []
    for r in rows:
        floor = 0.9 - (r["t"] + 1) / (r["n"] + 1)
        if r["coverage"] < floor - 3 * r["stderr"] or r["coverage"] < r["lower_bound"] - 3 * r["stderr"]:
            bad.append((r["t"], r["n"], r["coverage"], floor, r["lower_bound"]))
    return Check(
        "2 beta-mixing lower bound",
        not bad,
        f"{len(rows) - len(bad)}/{len(rows)} grid cells above the lower bound",
        {"violations": bad, "rows": rows},
    )


@_timed
def criterion_3(seed: int = 0, scale: str = "full", rows: list[dict] | None = None, workers: int = 1) -> Check:
    """Coverage <= ceil(0.9(n+1))/(n+1) + (t+1)/(n+1) + 3 sigma."""
    rows = figure1_rows(seed, scale, workers) if rows is None else rows
    bad = []
    for r in rows:
        n, t = r["n"], r["t"]
        cap = math.ceil(0.9 * (n + 1) - 1e-9) / (n + 1) + (t + 1) / (n + 1)
        if r["coverage"] > cap + 3 * r["stderr"] or r["coverage"] > r["upper_bound"] + 3 * r["stderr"]:
            bad.append((t, n, r["coverage"], cap, r["upper_bound"]))
    return Check(
        "3 distinct-score upper bound",
        not bad,
        f"{len(rows) - len(bad)}/{len(rows)} grid cells below the upper bound",
        {"violations": bad},
    )


# --------------------------------------------------------------------------
# 4: deficit halves when n doubles


@_timed
def criterion_4(seed: int = 0, scale: str = "full", workers: int = 1) -> Check:
    """deficit(t, n)/deficit(t, 2n) in [1.4, 2.6] for t in {2,4,8}, n >= 100, 3 sigma < 20% of each deficit."""
    if scale == "full":
        ts, ns = (2, 4, 8), (100, 200, 400)
    else:
        ts, ns = (8,), (100, 200)
    cells = {(t, n): measure_deficit(t, n, 0.1, seed, rel=0.2, workers=workers) for t in ts for n in ns}
    problems, ratios = [], []
    for (t, n), c in cells.items():
        if not (c["deficit"] > 0 and 3 * c["stderr"] < 0.2 * c["deficit"]):
            problems.append(f"t={t} n={n}: deficit {c['deficit']:.3g} with stderr {c['stderr']:.2g}")
    for t in ts:
        for n in ns:
            if (t, 2 * n) in cells:
                ratio = cells[(t, n)]["deficit"] / cells[(t, 2 * n)]["deficit"]
                ratios.append({"t": t, "n": n, "ratio": ratio})
                if not 1.4 <= ratio <= 2.6:
                    problems.append(f"t={t} n={n}: ratio {ratio:.3f}")
    summary = ", ".join(f"t={r['t']} n={r['n']}:{r['ratio']:.2f}" for r in ratios)
    return Check("4 1/n deficit scaling", not problems, summary, {"cells": list(cells.values()), "ratios": ratios, "problems": problems})


# --------------------------------------------------------------------------
# 5: cyclic mixture undercoverage


@_timed
def criterion_5(seed: int = 0, scale: str = "full", workers: int = 1) -> Check:
    """alpha=0.1, n=9, K=1e4, b in {0.5, 1}: coverage under the ceiling; b=1 also under 0.9 - 0.9/8 + 0.0045."""
    trials = 1_000_000 if scale == "full" else 100_000
    out, ok = {}, True
    for b in (0.5, 1.0):
        rep = run_thm2_experiment(0.1, 9, b, 10_000, trials, seed, workers=workers)
        p, se = rep.empirical_coverage, rep.standard_error
        ceiling = (1 - b / 4) * 0.9 + 0.0045
        good = p <= ceiling + 3 * se
        if b == 1.0:
            good = good and p <= 0.9 - 0.9 / 8 + 0.0045 + 3 * se
        ok = ok and good
        out[b] = {"coverage": p, "stderr": se, "ceiling": ceiling}
    summary = ", ".join(f"b={b}: {v['coverage']:.4f} <= {v['ceiling']:.4f}" for b, v in out.items())
    return Check("5 cyclic mixture construction", ok, summary, {str(k): v for k, v in out.items()})


# --------------------------------------------------------------------------
# 6: Monte Carlo vs exact enumeration, vectorized vs brute-force coefficients


def random_finite_configs(count: int, seed: int) -> list[ExperimentConfig]:
    rng = np.random.default_rng([seed, 6])
    configs = []
    while len(configs) < count:
        A = int(rng.integers(2, 4))
        n = int(rng.integers(2, 8))
        T = rng.dirichlet(np.ones(A), size=A).round(6)
        T[:, -1] = 1 - T[:, :-1].sum(axis=1)
        if np.any(T < 0):
            continue
        kind = ["rank", "lag_match", "frequency"][len(configs) % 3]
        alpha = float(rng.choice([0.1, 0.2, 0.3, 0.4]))
        jitter = bool(rng.integers(0, 2))
        initial = "stationary" if rng.random() < 0.5 else rng.dirichlet(np.ones(A)).round(6).tolist()
        if initial != "stationary":
            initial[-1] = 1 - sum(initial[:-1])
        if kind == "frequency":
            L = int(rng.integers(0, 2))
            n0 = int(rng.integers(1, n))
            if n - n0 <= L:
                continue
            score, mode = {"kind": "frequency", "memory": L}, "split"
        else:
            L = int(rng.integers(0, 3)) if kind == "lag_match" else 0
            if n <= L:
                continue
            score, mode, n0 = ({"kind": kind, "memory": L} if kind == "lag_match" else {"kind": "rank"}), "pretrained", None
        configs.append(
            ExperimentConfig(
                process={"kind": "markov", "transition": T.tolist(), "initial": initial},
                score=score,
                mode=mode,
                n=n,
                n0=n0,
                alpha=alpha,
                trials=20_000,
                master_seed=seed + len(configs),
                jitter=jitter,
            )
        )
    return configs


def exact_coverage_of(cfg: ExperimentConfig, method: str = "rank") -> float:
    return run_exact_coverage(
        build_process(cfg), build_score(cfg), cfg.alpha, cfg.mode, cfg.split_point, cfg.jitter, method
    )


def coefficient_mismatch(spec) -> float:
    """Largest gap between vectorized and dictionary-based Psi, Psi-bar and beta."""
    joint = P.joint_pmf(spec)
    law = O.joint_law(spec)
    m = spec.n + 1
    worst = 0.0
    for tau in range(m):
        col = D.psi_column(joint, tau)
        for k in range(1, m + 1):
            worst = max(worst, abs(col[k - 1] - O.psi(law, k, tau)))
        worst = max(worst, abs(D.psi_bar(col) - O.psi_bar(law, tau)))
        worst = max(worst, abs(D.beta_mixing(joint, tau) - O.beta(law, tau)))
    return worst


@_timed
def criterion_6(seed: int = 0, scale: str = "full", workers: int = 1) -> Check:
    """>= 20 random finite configs: MC within 4 sigma of exact; coefficients match brute force to 1e-12."""
    count = 20 if scale == "full" else 6
    rows, problems = [], []
    for cfg in random_finite_configs(count, seed):
        exact = exact_coverage_of(cfg)
        oracle_cov = O.coverage(
            O.joint_law(build_process(cfg)), _oracle_scores(cfg), cfg.alpha, cfg.jitter
        )
        p = count_covered(cfg, workers) / cfg.trials
        se = max(standard_error(p, cfg.trials), 1 / cfg.trials)
        gap = coefficient_mismatch(build_process(cfg))
        rows.append({"exact": exact, "oracle": oracle_cov, "mc": p, "stderr": se, "coef_gap": gap})
        if abs(p - exact) > 4 * se:
            problems.append(f"MC {p:.5f} vs exact {exact:.5f} (4 sigma {4 * se:.5f})")
        if abs(exact - oracle_cov) > TOL:
            problems.append(f"exact {exact!r} vs oracle {oracle_cov!r}")
        if gap > TOL:
            problems.append(f"coefficient gap {gap:.3g}")
    worst = max(r["coef_gap"] for r in rows)
    return Check(
        "6 exact-oracle equivalence",
        not problems,
        f"{len(rows)} configs, max |MC-exact|/sigma {max(abs(r['mc'] - r['exact']) / r['stderr'] for r in rows):.2f}, max coefficient gap {worst:.1e}",
        {"rows": rows, "problems": problems},
    )


def _oracle_scores(cfg: ExperimentConfig):
    """Per-sequence score map built from single-point score calls."""
    proc, scorer = build_process(cfg), build_score(cfg)
    L = cfg.memory

    def points(seq):
        x, y = proc.embed(np.asarray(seq))
        return [P.DataPoint(float(a), float(b)) for a, b in zip(x, y)]

    if cfg.mode == "split":
        n0 = cfg.split_point

        def split_scores(seq):
            pts = points(seq)
            s = scorer.fit(P.TimeSeries.from_points(pts[:n0]))
            return [s(pts[i], tuple(pts[i - 1 - l] for l in range(L))) for i in range(n0 + L, len(pts))]

        return split_scores

    def scores(seq):
        pts = points(seq)
        return [scorer(pts[i], tuple(pts[i - 1 - l] for l in range(L))) for i in range(L, len(pts))]

    return scores


# --------------------------------------------------------------------------
# 7: switch-coefficient inequalities on finite toys


def stationary_toys(scale: str = "full") -> list:
    toys = [
        P.two_state_chain(0.9, 4),
        P.two_state_chain(0.6, 5),
        P.FiniteMarkovSpec([[0.5, 0.3, 0.2], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]], [1 / 3] * 3, 3),
        P.CyclicMixtureSpec(K=3, b=1.0, n=4),
        P.CyclicMixtureSpec(K=2, b=0.5, n=5),
    ]
    out = []
    for spec in toys:
        if isinstance(spec, P.FiniteMarkovSpec):
            spec = P.FiniteMarkovSpec(spec.transition, P.stationary_distribution(spec.transition), spec.n)
        out.append(spec)
    return out if scale == "full" else out[:2]


def check_prop1(spec) -> list[str]:
    joint = P.joint_pmf(spec)
    n = spec.n
    bad = []
    for tau in range(n + 1):
        b = D.beta_mixing(joint, tau)
        for k in range(1, n + 2):
            v = D.psi_k_tau(joint, k, tau)
            if k <= n - tau and v > 2 * b + TOL:
                bad.append(f"psi_{k},{tau}={v:.6g} > 2 beta={2 * b:.6g}")
            if k > n - tau and v > TOL:
                bad.append(f"psi_{k},{tau}={v:.3g} != 0")
    return bad


def check_prop2(spec, score) -> list[str]:
    joint = P.joint_pmf(spec)
    slaw = D.score_law(joint, score, spec.embed)
    n, L = spec.n, score.memory
    bad = []
    for tau in range(L, n - L + 1):
        s_col = D.psi_column(slaw, tau)
        z_col = D.psi_column(joint, tau - L)
        for k in range(1, n - L + 2):
            if s_col[k - 1] > z_col[k + L - 1] + TOL:
                bad.append(f"S psi_{k},{tau} > Z psi_{k + L},{tau - L}")
        if D.psi_bar(s_col) > (n + 1) / (n - L + 1) * D.psi_bar(z_col) + TOL:
            bad.append(f"psibar_{tau}(S) too large")
    return bad


def check_prop3(spec, algorithm, n0: int) -> list[str]:
    joint = P.joint_pmf(spec)
    n, L = spec.n, algorithm.memory
    n1 = n - n0
    beta = {tau: D.beta_mixing(joint, tau) for tau in range(n + 1)}
    bad = []
    for ts in range(0, n1 - L + 1):
        law = D.split_score_law(joint, algorithm, n0, ts, spec.embed)
        for tau in range(L, n1 - L - ts + 1):
            for k in range(1, n1 - L + 2 - ts):
                v = D.psi_k_tau(law, k, tau)
                cap = 2 * beta[ts] + (2 * beta[tau - L] if k <= n1 - tau - ts else 0.0)
                if v > cap + TOL:
                    bad.append(f"split psi k={k} tau={tau} tau*={ts}: {v:.6g} > {cap:.6g}")
                route = D.split_switch_tv(joint, n0, k + L, tau - L, ts)
                if v > route + TOL:
                    bad.append(f"split psi k={k} tau={tau} tau*={ts} exceeds data-level TV {route:.6g}")
    return bad


@_timed
def criterion_7(seed: int = 0, scale: str = "full", workers: int = 1) -> Check:
    """Psi <= 2 beta, the memory shift and the split case bounds, exactly on finite toys."""
    problems, counts = [], {"prop1": 0, "prop2": 0, "prop3": 0}
    for spec in stationary_toys(scale):
        problems += check_prop1(spec)
        counts["prop1"] += 1
        A = spec.alphabet_size
        for score in (rank_score([(a, a) for a in range(A)]), lag_match_score(1), lag_match_score(2)):
            if spec.n >= 2 * score.memory:
                problems += check_prop2(spec, score)
                counts["prop2"] += 1
        for L in (0, 1):
            n0 = max(1, spec.n // 2 - 1)
            if spec.n - n0 > L:
                problems += check_prop3(spec, FrequencyAlgorithm(L), n0)
                counts["prop3"] += 1
    return Check(
        "7 switch-coefficient inequalities",
        not problems,
        f"{counts} toy cases, {len(problems)} violations",
        {"problems": problems[:20], "counts": counts},
    )


# --------------------------------------------------------------------------
# 8: quantile stability


def stability_violations(max_m: int, a_grid=None) -> tuple[int, int]:
    """(cases, violations) over every tie pattern, deletion subset and a."""
    a_grid = [round(0.05 * i, 2) for i in range(1, 20)] if a_grid is None else a_grid
    cases = violations = 0
    for m in range(1, max_m + 1):
        for cuts in itertools.product((0, 1), repeat=m - 1):
            v = np.concatenate([[0], np.cumsum(cuts)]).astype(float)
            for tau in range(m):
                for drop in itertools.combinations(range(m), tau):
                    keep = np.delete(v, drop)
                    for a in a_grid:
                        lo = quantile(v, (1 - a) * (m - tau) / m)
                        mid = quantile(keep, 1 - a)
                        hi = quantile(v, 1 - a * (m - tau) / m)
                        cases += 1
                        violations += not (lo <= mid <= hi)
    return cases, violations


@_timed
def criterion_8(seed: int = 0, scale: str = "full", workers: int = 1) -> Check:
    """Exhaustive quantile stability to deletion for m <= 8."""
    max_m = 8 if scale == "full" else 5
    cases, bad = stability_violations(max_m)
    return Check("8 quantile stability", bad == 0, f"{cases} cases (m <= {max_m}), {bad} violations", {"cases": cases, "violations": bad})


# --------------------------------------------------------------------------
# 9: golden deletion vectors

GOLDEN = {
    (3, 5, 0): [1, 2, 8, 9, 10],
    (3, 5, 1): [9, 10, 1, 2, 3],
    (8, 5, 0): [6, 7, 8, 9, 10],
    (8, 5, 1): [4, 5, 6, 7, 8],
}


@_timed
def criterion_9(seed: int = 0, scale: str = "full", workers: int = 1) -> Check:
    w = list(range(1, 11))
    got = {key: D.delete(w, *key) for key in GOLDEN}
    bad = {str(k): v for k, v in got.items() if v != GOLDEN[k]}
    return Check("9 deletion golden vectors", not bad, f"{len(GOLDEN) - len(bad)}/{len(GOLDEN)} cases reproduced", {"mismatches": bad})


# --------------------------------------------------------------------------
# 10: split coverage


@_timed
def criterion_10(seed: int = 0, scale: str = "full", workers: int = 1) -> Check:
    """MA(t in {0,2}), least-squares AR with L in {0,1}, n=400, n0=200: coverage >= cor2 - 3 sigma."""
    trials = 100_000 if scale == "full" else 10_000
    rows, ok = [], True
    for t in (0, 2):
        for L in (0, 1):
            cfg = ExperimentConfig(
                process={"kind": "ma", "t": t},
                score={"kind": "ar", "memory": L},
                mode="split",
                n=400,
                n0=200,
                alpha=0.1,
                trials=trials,
                master_seed=seed,
            )
            rep = run_coverage_sim(cfg, workers)
            bound = B.cor2_split_lower(0.1, 200, L, D.ma_beta_table(t, 400).beta).bound_value
            good = rep.empirical_coverage >= bound - 3 * rep.standard_error
            ok = ok and good
            rows.append({"t": t, "L": L, "coverage": rep.empirical_coverage, "stderr": rep.standard_error, "bound": bound})
    summary = ", ".join(f"t={r['t']} L={r['L']}: {r['coverage']:.4f} >= {r['bound']:.4f}" for r in rows)
    return Check("10 split coverage", ok, summary, {"rows": rows})


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}
