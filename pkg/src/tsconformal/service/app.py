"""HTTP service exposing the experiments, exact computations and prediction."""

from __future__ import annotations

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import bounds as B
from .. import dependence as D
from .. import processes as P
from ..config import CoverageReport, ExperimentConfig, build_process, build_score
from ..exact import run_exact_coverage
from ..predict import predict_next, read_history_csv
from ..simulate import run_coverage_sim, run_figure1, run_thm2_experiment
from ..verify import run_verification_suite
from .schemas import (
    BetaRow,
    BoundsRequest,
    BoundsResponse,
    CoverageSimRequest,
    ExactCoverageRequest,
    ExactCoverageResponse,
    Figure1Request,
    Figure1Response,
    PredictRequest,
    PredictResponse,
    PsiRow,
    SwitchExactRequest,
    SwitchExactResponse,
    Thm2Request,
    VerifyRequest,
    VerifyResponse,
)

app = FastAPI(title="tsconformal", version="0.1.0")


@app.exception_handler(ValueError)
async def value_error_handler(request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/coverage-sim", response_model=CoverageReport)
def coverage_sim(req: CoverageSimRequest) -> CoverageReport:
    cfg = ExperimentConfig.model_validate(req.model_dump(exclude={"workers"}))
    return run_coverage_sim(cfg, workers=req.workers)


@app.post("/exact-coverage", response_model=ExactCoverageResponse)
def exact_coverage(req: ExactCoverageRequest) -> ExactCoverageResponse:
    cfg = req.experiment()
    proc = build_process(cfg)
    value = run_exact_coverage(proc, build_score(cfg), cfg.alpha, cfg.mode, cfg.split_point, cfg.jitter, req.method)
    return ExactCoverageResponse(coverage=value, method=req.method, sequences=proc.alphabet_size ** (cfg.n + 1))


@app.post("/switch-exact", response_model=SwitchExactResponse)
def switch_exact(req: SwitchExactRequest) -> SwitchExactResponse:
    cfg = ExperimentConfig(process=req.process, n=req.n, score=req.score or {"kind": "rank"})
    proc = build_process(cfg)
    joint = P.joint_pmf(proc)
    if req.score is None:
        table = D.switch_table(joint, req.taus, with_beta=True)
        if isinstance(proc, P.CyclicMixtureSpec):
            table.beta_bound = {tau: D.cyclic_beta_bound(proc.b) for tau in range(req.n + 1)}
        law = "data"
    else:
        if cfg.mode != "pretrained":
            raise ValueError("score laws need a pretrained score")
        table = D.switch_table(D.score_law(joint, build_score(cfg), proc.embed), req.taus, with_beta=False)
        law = "scores"
    lags = sorted(set(table.psi_bar) | set(table.beta))
    return SwitchExactResponse(
        n=table.n,
        law=law,
        provenance=table.provenance,
        psi=[PsiRow(k=k, tau=tau, psi=v) for (k, tau), v in sorted(table.psi.items(), key=lambda kv: (kv[0][1], kv[0][0]))],
        lags=[
            BetaRow(
                tau=tau,
                beta=table.beta.get(tau),
                psi_bar=table.psi_bar.get(tau),
                beta_bound=table.beta_bound.get(tau) if table.beta_bound else None,
            )
            for tau in lags
        ],
        notes=table.notes,
    )


def _lag_table(req: BoundsRequest) -> dict[int, float]:
    if req.table is not None:
        return {int(k): v for k, v in req.table.items()}
    if req.ma_t is not None:
        return D.ma_beta_table(req.ma_t, req.n, req.conservative).beta
    raise ValueError("supply either 'table' or 'ma_t'")


@app.post("/bounds", response_model=BoundsResponse)
def bounds(req: BoundsRequest) -> BoundsResponse:
    a, n, L = req.alpha, req.n, req.L
    if req.bound == "thm2":
        if req.b is None or req.K is None:
            raise ValueError("thm2 needs b and K")
        value = B.thm2_ceiling(a, n, req.b, req.K)
        return BoundsResponse(
            name="thm2_ceiling", kind="upper", bound_value=value, minimizing_tau=-1, minimizing_tau_star=-1,
            vacuous=value >= 1,
        )
    if req.bound == "thm4":
        if req.table is None:
            raise ValueError("thm4 needs a (tau, tau_star) table")
        table = {}
        for key, v in req.table.items():
            try:
                tau, ts = (int(s) for s in key.split(","))
            except ValueError:
                raise ValueError(f"thm4 table keys must read 'tau,tau_star', got {key!r}") from None
            table[(tau, ts)] = v
        res = B.thm4_split_lower(a, n, L, table)
    elif req.bound in ("thm1", "thm3"):
        if req.table is None and req.ma_t is not None:
            psi = B.score_psi_bar_from_beta(_lag_table(req), n, L)
        else:
            psi = _lag_table(req)
        res = (B.thm1_lower if req.bound == "thm1" else B.thm3_upper)(a, n, L, psi)
    elif req.bound == "cor1":
        res = B.cor1_lower(a, n, L, _lag_table(req))
    elif req.bound == "cor1_psi":
        res = B.cor1_lower_psi(a, n, L, _lag_table(req))
    else:
        res = B.cor2_split_lower(a, n, L, _lag_table(req))
    return BoundsResponse(**res.to_dict())


@app.post("/figure1", response_model=Figure1Response)
def figure1(req: Figure1Request) -> Figure1Response:
    rows = run_figure1(req.ts, req.ns, req.alpha, req.trials, req.seed, req.estimator, req.workers)
    return Figure1Response(rows=rows)


@app.post("/thm2", response_model=CoverageReport)
def thm2(req: Thm2Request) -> CoverageReport:
    return run_thm2_experiment(req.alpha, req.n, req.b, req.K, req.trials, req.seed, req.jitter, req.workers)


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest) -> VerifyResponse:
    return VerifyResponse(**run_verification_suite(req.seed, req.scale, req.criteria, req.workers))


def _finite(x: float) -> float | None:
    return x if math.isfinite(x) else None


@app.post("/predict", response_model=PredictResponse)
def predict(req: PredictRequest) -> PredictResponse:
    history, x_next = read_history_csv(req.csv)
    out = predict_next(history, x_next, req.alpha, req.L, req.n0, req.f, req.beta)
    empty = math.isnan(out["lo"])
    out.update(
        lo=None if empty else _finite(out["lo"]),
        hi=None if empty else _finite(out["hi"]),
        threshold=_finite(out["threshold"]),
        empty=empty,
    )
    return PredictResponse(**out)


def main() -> None:  # pragma: no cover - manual entry point
    import uvicorn

    uvicorn.run(app, host="127.0.0.1", port=8000)
