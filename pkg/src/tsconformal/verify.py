"""Self-verification suite: module invariants plus the acceptance checks.

``run_verification_suite`` never raises on a failed check; failures are
recorded in the summary and reflected in ``passed``.
"""

from __future__ import annotations

import itertools
import math
import time
import traceback

import numpy as np

from . import bounds as B
from . import dependence as D
from . import processes as P
from .acceptance import CRITERIA, Check, exact_coverage_of, random_finite_configs
from .config import ExperimentConfig, build_process, build_score
from .quantile import conformal_level, order_index, quantile
from .simulate import bound_results, run_coverage_sim

TOL = 1e-12


def _check(name: str, problems: list[str], summary: str = "") -> Check:
    return Check(name, not problems, summary or f"{len(problems)} problems", {"problems": problems[:20]})


def check_quantile_examples(seed: int) -> Check:
    p = []
    v = [3.0, 1.0, 2.0]
    if quantile(v, 0.5) != 2:
        p.append("Q_0.5([3,1,2]) != 2")
    if quantile(v, 1.2) != math.inf:
        p.append("Q_1.2 != inf")
    if quantile(v, 0) != -math.inf:
        p.append("Q_0 != -inf")
    if quantile([5.0], 1) != 5:
        p.append("Q_1([5]) != 5")
    for alpha, m, want in [(0.1, 9, 1.0), (0.1, 19, 18 / 19), (0.5, 1, 1.0)]:
        if abs(conformal_level(alpha, m) - want) > TOL:
            p.append(f"level({alpha}, {m}) != {want}")
    return _check("quantile examples", p)


def check_quantile_properties(seed: int) -> Check:
    rng = np.random.default_rng([seed, 1])
    p = []
    for _ in range(300):
        m = int(rng.integers(1, 30))
        v = rng.normal(size=m)
        if rng.random() < 0.5:
            v = np.round(v, 1)
        bs = np.sort(rng.uniform(-0.2, 1.2, size=8))
        qs = [quantile(v, b) for b in bs]
        if any(a > b for a, b in zip(qs, qs[1:])):
            p.append("monotonicity")
        a = float(rng.uniform(0, 1))
        q = quantile(v, 1 - a)
        frac = np.mean(v <= q)
        if frac < 1 - a - TOL:
            p.append("lower count")
        if len(set(v.tolist())) == m:
            b = float(rng.uniform(0.01, 1))
            if np.sum(v <= quantile(v, b)) != order_index(b, m):
                p.append("rank identity")
            if frac > order_index(1 - a, m) / m + TOL:
                p.append("upper count")
    return _check("quantile invariants", p)


def check_deletion_laws(seed: int) -> Check:
    p = []
    for m in range(1, 13):
        w = list(range(1, m + 1))
        for k in range(1, m + 1):
            for tau in range(m):
                d0, d1 = D.delete(w, k, tau, 0), D.delete(w, k, tau, 1)
                if len(d0) != m - tau or len(d1) != m - tau:
                    p.append(f"length m={m} k={k} tau={tau}")
                if d0[-1] != m or d1[-1] != k:
                    p.append(f"anchor m={m} k={k} tau={tau}")
    w = list(range(1, 8))
    split = {
        (1, 0): [1, 2, 3, 5, 7],
        (1, 1): [1, 2, 3, 7, 5],
        (2, 0): [1, 2, 3, 6, 7],
        (2, 1): [1, 2, 3, 5, 6],
    }
    for (k, j), want in split.items():
        if D.delete_split(w, 3, k, 1, 1, j) != want:
            p.append(f"split example k={k} j={j}")
    return _check("deletion length, anchor and split examples", p)


def check_tv(seed: int) -> Check:
    rng = np.random.default_rng([seed, 2])
    p = []
    bern = lambda q: P.FiniteDistribution(np.array([[0], [1]]), np.array([1 - q, q]), 2)
    if abs(D.tv_distance(bern(0.5), bern(0.9)) - 0.4) > TOL:
        p.append("Bernoulli example")
    for _ in range(50):
        A, m = int(rng.integers(2, 4)), int(rng.integers(1, 4))
        laws = [P.FiniteDistribution.from_dense(rng.dirichlet(np.ones(A**m)).reshape((A,) * m)) for _ in range(3)]
        a, b, c = laws
        if abs(D.tv_distance(a, b) - D.tv_distance(b, a)) > TOL:
            p.append("symmetry")
        if D.tv_distance(a, c) > D.tv_distance(a, b) + D.tv_distance(b, c) + TOL:
            p.append("triangle")
        table = rng.integers(0, 3, size=(A,) * m)
        g = lambda out: table[tuple(out.T)][:, None]
        if D.tv_distance(D.pushforward_distribution(a, g), D.pushforward_distribution(b, g)) > D.tv_distance(a, b) + TOL:
            p.append("data processing")
    return _check("total variation", p)


def check_bound_examples(seed: int) -> Check:
    p = []
    r = B.thm1_lower(0.1, 9, 0, [0.3, 0.1] + [0.0] * 8)
    if abs(r.bound_value - 0.7) > TOL or r.minimizing_tau != 1:
        p.append("thm1 toy")
    if abs(B.thm3_upper(0.1, 9, 0, [0.0] * 10).bound_value - 0.9) > TOL:
        p.append("thm3 n=9")
    if abs(B.thm3_upper(0.1, 10, 0, [0.0] * 11).bound_value - 10 / 11) > TOL:
        p.append("thm3 n=10")
    if abs(B.thm2_ceiling(0.1, 9, 1.0, 10_000) - 0.6795) > TOL:
        p.append("thm2 ceiling")
    for t in (0, 1, 3):
        n = 40
        cons = D.ma_beta_table(t, n, conservative=True).beta
        r = B.cor1_lower(0.1, n, 0, cons)
        if abs(r.bound_value - (0.9 - (t + 1) / (n + 1))) > TOL or r.minimizing_tau != t + 1:
            p.append(f"cor1 MA({t})")
        r = B.cor2_split_lower(0.1, n, 0, cons)
        want = 0.9 - ((t + 1) + 0.1 * (t + 1)) / (n - (t + 1) + 1)
        if abs(r.bound_value - want) > TOL or (r.minimizing_tau, r.minimizing_tau_star) != (t + 1, t + 1):
            p.append(f"cor2 MA({t})")
    if abs(B.cor1_lower(0.1, 40, 0, D.ma_beta_table(0, 40).beta).bound_value - 0.9) > TOL:
        p.append("cor1 iid")
    return _check("bound examples", p)


def check_bound_minimizers(seed: int) -> Check:
    rng = np.random.default_rng([seed, 3])
    p = []
    for _ in range(40):
        n, L = int(rng.integers(2, 12)), int(rng.integers(0, 3))
        if n < 2 * L:
            continue
        a = float(rng.uniform(0.05, 0.5))
        psi = rng.uniform(0, 0.3, size=n + 1).round(2)
        beta = rng.uniform(0, 0.2, size=n + 1).round(2)
        for res in (B.thm1_lower(a, n, L, psi), B.cor1_lower(a, n, L, beta), B.cor2_split_lower(a, n, L, beta)):
            totals = [c["total"] for c in res.components]
            best = min(totals)
            first = next(c for c in res.components if c["total"] <= best + TOL)
            if (first["tau"], first["tau_star"]) != (res.minimizing_tau, res.minimizing_tau_star):
                p.append(f"{res.name} minimizer")
            if abs((1 - a - best) - res.bound_value) > TOL:
                p.append(f"{res.name} value")
        table = {(tau, 0): float(psi[tau]) for tau in range(n - L + 1)}
        if abs(B.thm4_split_lower(a, n, L, table).bound_value - B.thm1_lower(a, n, L, psi).bound_value) > 0:
            p.append("thm4 tau*=0 consistency")
    return _check("bound minimizers", p)


def check_determinism(seed: int) -> Check:
    cfg = ExperimentConfig(process={"kind": "ma", "t": 1}, n=20, trials=20_000, master_seed=seed)
    a = run_coverage_sim(cfg, workers=1)
    b = run_coverage_sim(cfg, workers=2)
    p = []
    if a.empirical_coverage != b.empirical_coverage:
        p.append("worker count changed the estimate")
    if a.standard_error != math.sqrt(a.empirical_coverage * (1 - a.empirical_coverage) / a.trials):
        p.append("standard error formula")
    for bc in a.bounds:
        want = (
            a.empirical_coverage >= bc.value - 3 * a.standard_error
            if bc.kind == "lower"
            else a.empirical_coverage <= bc.value + 3 * a.standard_error
        )
        if want != bc.satisfied:
            p.append(f"flag {bc.name}")
    return _check("harness determinism and report flags", p)


def check_exact_paths(seed: int) -> Check:
    p = []
    iid = P.FiniteMarkovSpec([[0.5, 0.5], [0.5, 0.5]], [0.5, 0.5], 3)
    rank = build_score(ExperimentConfig(process={"kind": "cyclic", "K": 2, "b": 0}, score={"kind": "rank"}, n=3))
    from .exact import run_exact_coverage

    for jitter in (False, True):
        ev = run_exact_coverage(iid, rank, 0.25, jitter=jitter, method="event")
        rk = run_exact_coverage(iid, rank, 0.25, jitter=jitter, method="rank")
        if abs(ev - rk) > TOL:
            p.append(f"event vs rank (jitter={jitter})")
    if run_exact_coverage(iid, rank, 0.01) != 1.0:
        p.append("q = +inf gives coverage 1")
    for cfg in random_finite_configs(8, seed):
        if abs(exact_coverage_of(cfg, "rank") - exact_coverage_of(cfg, "event")) > TOL:
            p.append("random config dual path")
    return _check("exact coverage paths", p)


def check_sandwich(seed: int) -> Check:
    """Exact jittered coverage lies between the exact-coefficient lower and upper bounds."""
    p = []
    for cfg in random_finite_configs(12, seed + 100):
        if cfg.mode != "pretrained":
            continue
        cfg = cfg.model_copy(update={"jitter": True})
        exact = exact_coverage_of(cfg)
        for res, _ in bound_results(cfg)[0]:
            if res.kind == "lower" and exact < res.bound_value - TOL:
                p.append(f"{res.name} {res.bound_value:.6f} > exact {exact:.6f}")
            if res.kind == "upper" and exact > res.bound_value + TOL:
                p.append(f"{res.name} {res.bound_value:.6f} < exact {exact:.6f}")
    return _check("bound sandwich on finite processes", p)


INVARIANTS = [
    check_quantile_examples,
    check_quantile_properties,
    check_deletion_laws,
    check_tv,
    check_bound_examples,
    check_bound_minimizers,
    check_determinism,
    check_exact_paths,
    check_sandwich,
]


def run_verification_suite(seed: int = 0, scale: str = "quick", criteria=None, workers: int = 1) -> dict:
    """Run every invariant check and the selected acceptance criteria (all by default)."""
    if scale not in ("quick", "full"):
        raise ValueError("scale must be 'quick' or 'full'")
    criteria = sorted(CRITERIA) if criteria is None else list(criteria)
    results = []
    for fn in INVARIANTS:
        results.append(_guard(fn.__name__, lambda: fn(seed)))
    for i in criteria:
        results.append(_guard(f"criterion {i}", lambda: CRITERIA[i](seed, scale, workers=workers)))
    return {
        "passed": all(r.passed for r in results),
        "seed": seed,
        "scale": scale,
        "checks": [{"name": r.name, "passed": r.passed, "summary": r.summary, "seconds": r.seconds} for r in results],
    }


def _guard(name: str, run) -> Check:
    start = time.perf_counter()
    try:
        check = run()
    except Exception as exc:  # a crashing check is a failed check
        check = Check(name, False, f"error: {exc!r}", {"traceback": traceback.format_exc()})
    if not check.seconds:
        check.seconds = time.perf_counter() - start
    return check
